#include "sqec/lattice_io.h"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sqec {

namespace {

std::string dot_spec(const LatticeGraph& g, const DotKey& d) {
  Site s = g.stab_site(d.type, d.stab);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%c:%d:%d:%d", stab_type_char(d.type),
                d.round, s.row, s.col);
  return buf;
}

StabType parse_type(const std::string& s) {
  if (s == "Z" || s == "z") return StabType::Z;
  if (s == "X" || s == "x") return StabType::X;
  throw std::invalid_argument("bad stabilizer type '" + s + "'");
}

DotKey parse_dot_spec(const CodeConfig& cfg, const std::string& spec) {
  char type;
  int round, row, col;
  if (std::sscanf(spec.c_str(), "%c:%d:%d:%d", &type, &round, &row, &col) != 4)
    throw std::invalid_argument("bad dot spec '" + spec + "'");
  StabType t = parse_type(std::string(1, type));
  const Stabilizer* st = cfg.stabilizer_at({row, col});
  if (!st || st->type != t)
    throw std::invalid_argument("no such stabilizer site in '" + spec + "'");
  return {t, st->index, round};
}

}  // namespace

std::string format_dot(const LatticeGraph& g, const DotKey& d) {
  return dot_spec(g, d);
}

void dump_lattice(const LatticeGraph& g, std::ostream& out) {
  std::vector<DotKey> dots;
  for (StabType t : {StabType::Z, StabType::X})
    for (int s = 0; s < g.num_stabs(t); ++s)
      for (int r = g.round_lo(); r <= g.round_hi(); ++r) {
        DotKey d{t, s, r};
        if (g.has_dot(d)) dots.push_back(d);
      }
  std::sort(dots.begin(), dots.end(), [&](const DotKey& a, const DotKey& b) {
    return g.order_key(a) < g.order_key(b) ||
           (g.order_key(a) == g.order_key(b) && a < b);
  });
  for (const DotKey& d : dots) {
    Site s = g.stab_site(d.type, d.stab);
    out << "DOT " << stab_type_char(d.type) << ' ' << d.round << ' ' << s.row
        << ' ' << s.col << '\n';
  }
  char num[128];
  for (const DotKey& d : dots) {
    g.for_neighbors(d, [&](const LineRef& line) {
      if (!line.to_boundary()) {
        // Emit each dot-dot line once, from its lexicographically first end.
        if (g.order_key(line.b) < g.order_key(d)) return;
        if (g.order_key(line.b) == g.order_key(d) && line.b < d) return;
        if (!g.has_dot(line.b)) return;
      }
      std::snprintf(num, sizeof num, "%.17g %.17g", line.p, line.w);
      out << "LINE " << dot_spec(g, d) << ' ';
      if (line.to_boundary())
        out << "BOUNDARY:" << line.boundary;
      else
        out << dot_spec(g, line.b);
      out << ' ' << num << '\n';
    });
  }
}

LoadedLattice load_lattice(std::istream& in, int distance) {
  struct RawDot {
    std::string type;
    int round, row, col;
  };
  struct RawLine {
    std::string a, b;
    double p, w;
  };
  std::vector<RawDot> dots;
  std::vector<RawLine> lines;
  int max_coord = 1;

  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "DOT") {
      RawDot d;
      if (!(ss >> d.type >> d.round >> d.row >> d.col))
        throw std::invalid_argument("bad DOT line: " + line);
      max_coord = std::max({max_coord, d.row, d.col});
      dots.push_back(d);
    } else if (tag == "LINE") {
      RawLine l;
      if (!(ss >> l.a >> l.b >> l.p >> l.w))
        throw std::invalid_argument("bad LINE line: " + line);
      lines.push_back(l);
    } else if (tag == "VERTEX") {
      // Vertex lists are parsed separately; ignore here.
    } else {
      throw std::invalid_argument("unknown record '" + tag + "'");
    }
  }

  LoadedLattice out;
  int d = distance > 0 ? distance : (max_coord + 3) / 2;
  out.config = std::make_unique<CodeConfig>(std::max(2, d));
  out.lattice = std::make_unique<ExplicitLattice>(*out.config);
  for (const RawDot& rd : dots) {
    const Stabilizer* st = out.config->stabilizer_at({rd.row, rd.col});
    if (!st || st->type != parse_type(rd.type))
      throw std::invalid_argument("DOT at a non-stabilizer site");
    out.lattice->add_dot({st->type, st->index, rd.round});
  }
  for (const RawLine& rl : lines) {
    DotKey a = parse_dot_spec(*out.config, rl.a);
    if (rl.b.rfind("BOUNDARY:", 0) == 0) {
      int b = std::stoi(rl.b.substr(9));
      out.lattice->add_boundary_line(a, b, rl.p, rl.w);
    } else {
      DotKey b = parse_dot_spec(*out.config, rl.b);
      out.lattice->add_line(a, b, rl.p, rl.w);
    }
  }
  return out;
}

std::vector<DotKey> parse_vertices(std::istream& in,
                                   const CodeConfig& config) {
  std::vector<DotKey> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag != "VERTEX") continue;
    std::string type;
    int round, row, col;
    if (!(ss >> round >> row >> col >> type))
      throw std::invalid_argument("bad VERTEX line: " + line);
    const Stabilizer* st = config.stabilizer_at({row, col});
    if (!st || st->type != parse_type(type))
      throw std::invalid_argument("VERTEX at a non-stabilizer site");
    out.push_back({st->type, st->index, round});
  }
  return out;
}

}  // namespace sqec
