#pragma once

#include <string>
#include <string_view>

#include "flatlap/bundle.hpp"
#include "flatlap/surface.hpp"

namespace flatlap {

/// A surface together with the bundle block of its description file.
struct SurfaceDocument {
  SquareTiledSurface surface;
  FlatUnitaryBundle bundle;
};

/// Parses the text format
///
///     squares: 2
///     glue: (0,N) (1,N) halfturn
///     rank: 1
///     transport: 0 -1+0i
///
/// `#` starts a comment. Seam ids are the 0-based order of `glue` lines. The
/// bundle block is optional (rank 1, identity transports). Flatness is not
/// checked here; see require_flat().
SurfaceDocument parse_surface(std::string_view text);

/// Reads and parses a file; I/O failures raise Error.
SurfaceDocument load_surface(const std::string& path);

/// Inverse of parse_surface up to whitespace and comments.
std::string serialize_surface(const SurfaceDocument& doc);

/// Parses `a+bi`, `a-bi`, `a`, `bi`, `i`, `-i`.
Complex parse_complex(std::string_view token);
std::string format_complex(Complex z);

}  // namespace flatlap
