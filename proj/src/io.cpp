#include "flatlap/io.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include <fmt/format.h>

namespace flatlap {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ParseError("line " + std::to_string(line) + ": " + msg);
}

int parse_int(std::string_view tok, int line) {
  tok = trim(tok);
  std::string s(tok);
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') fail(line, "expected an integer, got '" + s + "'");
  return static_cast<int>(v);
}

Side parse_side(std::string_view tok, int line) {
  tok = trim(tok);
  if (tok == "N") return Side::N;
  if (tok == "E") return Side::E;
  if (tok == "S") return Side::S;
  if (tok == "W") return Side::W;
  fail(line, "unknown side '" + std::string(tok) + "'");
}

// Consumes "(sq,side)" from the front of `rest`.
SideRef parse_side_ref(std::string_view& rest, int line) {
  rest = trim(rest);
  if (rest.empty() || rest.front() != '(') fail(line, "expected '(square,side)'");
  const auto close = rest.find(')');
  if (close == std::string_view::npos) fail(line, "missing ')'");
  const std::string_view inner = rest.substr(1, close - 1);
  const auto comma = inner.find(',');
  if (comma == std::string_view::npos) fail(line, "expected ',' inside side reference");
  SideRef r{parse_int(inner.substr(0, comma), line), parse_side(inner.substr(comma + 1), line)};
  rest.remove_prefix(close + 1);
  return r;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::istringstream is{std::string(s)};
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

}  // namespace

Complex parse_complex(std::string_view token) {
  const std::string s(trim(token));
  auto bad = [&]() -> Complex { throw ParseError("malformed complex number '" + s + "'"); };
  if (s.empty()) return bad();
  const char* p = s.c_str();
  const char* const stop = p + s.size();

  auto read_real = [&](const char*& q, double& out) -> bool {
    char* end = nullptr;
    out = std::strtod(q, &end);
    if (end == q) return false;
    q = end;
    return true;
  };

  double re = 0.0, im = 0.0;
  const char* q = p;
  double first = 0.0;
  if (!read_real(q, first)) {
    // "i", "+i", "-i"
    if (s == "i" || s == "+i") return {0.0, 1.0};
    if (s == "-i") return {0.0, -1.0};
    return bad();
  }
  if (q == stop) return {first, 0.0};
  if (*q == 'i' && q + 1 == stop) return {0.0, first};
  re = first;
  if (*q != '+' && *q != '-') return bad();
  const double sign = *q == '-' ? -1.0 : 1.0;
  if (q + 2 == stop && q[1] == 'i') return {re, sign};
  if (!read_real(q, im)) return bad();
  if (q + 1 != stop || *q != 'i') return bad();
  return {re, im};
}

std::string format_complex(Complex z) {
  return fmt::format("{:.17g}{:+.17g}i", z.real(), z.imag());
}

SurfaceDocument parse_surface(std::string_view text) {
  std::optional<int> squares;
  std::vector<Seam> seams;
  std::optional<int> rank;
  std::vector<std::pair<int, std::vector<std::string>>> raw_transports;
  std::vector<int> transport_lines;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) fail(line_no, "expected 'key: value'");
    const std::string_view key = trim(line.substr(0, colon));
    std::string_view rest = trim(line.substr(colon + 1));
    if (key == "squares") {
      if (squares) fail(line_no, "duplicate 'squares'");
      squares = parse_int(rest, line_no);
      if (*squares <= 0) fail(line_no, "'squares' must be positive");
    } else if (key == "glue") {
      Seam seam;
      seam.first = parse_side_ref(rest, line_no);
      seam.second = parse_side_ref(rest, line_no);
      const std::string_view tag = trim(rest);
      if (tag == "translation") {
        seam.iso = Isometry::Translation;
      } else if (tag == "halfturn") {
        seam.iso = Isometry::HalfTurn;
      } else {
        fail(line_no, "expected 'translation' or 'halfturn', got '" + std::string(tag) + "'");
      }
      seams.push_back(seam);
    } else if (key == "rank") {
      if (rank) fail(line_no, "duplicate 'rank'");
      rank = parse_int(rest, line_no);
      if (*rank <= 0) fail(line_no, "'rank' must be positive");
    } else if (key == "transport") {
      auto toks = split_ws(rest);
      if (toks.empty()) fail(line_no, "transport needs a seam id");
      const int id = parse_int(toks.front(), line_no);
      toks.erase(toks.begin());
      raw_transports.emplace_back(id, std::move(toks));
      transport_lines.push_back(line_no);
    } else {
      fail(line_no, "unknown key '" + std::string(key) + "'");
    }
  }
  if (!squares) throw ParseError("missing 'squares'");
  const int r = rank.value_or(1);

  SquareTiledSurface surface = SquareTiledSurface::build(*squares, std::move(seams));
  std::map<int, CMatrix> transports;
  for (std::size_t t = 0; t < raw_transports.size(); ++t) {
    const auto& [id, toks] = raw_transports[t];
    if (static_cast<int>(toks.size()) != r * r) {
      fail(transport_lines[t], "transport needs " + std::to_string(r * r) + " entries, got " +
                                   std::to_string(toks.size()));
    }
    if (transports.count(id)) fail(transport_lines[t], "duplicate transport for seam " + std::to_string(id));
    CMatrix u(r, r);
    for (int k = 0; k < r * r; ++k) {
      try {
        u(k / r, k % r) = parse_complex(toks[k]);
      } catch (const ParseError& e) {
        fail(transport_lines[t], e.what());
      }
    }
    transports.emplace(id, std::move(u));
  }
  FlatUnitaryBundle bundle = FlatUnitaryBundle::build(surface, r, transports);
  return {std::move(surface), std::move(bundle)};
}

SurfaceDocument load_surface(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open surface file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_surface(ss.str());
}

std::string serialize_surface(const SurfaceDocument& doc) {
  std::string out = fmt::format("squares: {}\n", doc.surface.num_squares());
  for (const Seam& s : doc.surface.seams()) {
    out += fmt::format("glue: ({},{}) ({},{}) {}\n", s.first.square, side_name(s.first.side),
                       s.second.square, side_name(s.second.side), isometry_name(s.iso));
  }
  const int r = doc.bundle.rank();
  out += fmt::format("rank: {}\n", r);
  for (int k = 0; k < doc.bundle.num_seams(); ++k) {
    const CMatrix& u = doc.bundle.transport(k);
    if (u.isIdentity(0.0)) continue;
    out += fmt::format("transport: {}", k);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < r; ++j) out += " " + format_complex(u(i, j));
    }
    out += "\n";
  }
  return out;
}

}  // namespace flatlap
