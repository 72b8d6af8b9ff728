#pragma once

#include <iosfwd>
#include <memory>

#include "sqec/lattice.h"

namespace sqec {

// Line-oriented text form of a lattice:
//   DOT <type> <round> <row> <col>
//   LINE <type>:<round>:<row>:<col> <type>:<round>:<row>:<col> <p> <w>
//   LINE <type>:<round>:<row>:<col> BOUNDARY:<k> <p> <w>
// Dots are stabilizer sites; '#' starts a comment.
void dump_lattice(const LatticeGraph& g, std::ostream& out);

struct LoadedLattice {
  std::unique_ptr<CodeConfig> config;
  std::unique_ptr<ExplicitLattice> lattice;
};

// Parses the text form. `distance` 0 infers the smallest grid holding all
// mentioned sites.
LoadedLattice load_lattice(std::istream& in, int distance = 0);

// Vertex lists for the standalone matcher harness:
//   VERTEX <round> <row> <col> <type>
std::vector<DotKey> parse_vertices(std::istream& in, const CodeConfig& config);

std::string format_dot(const LatticeGraph& g, const DotKey& d);

}  // namespace sqec
