#pragma once

#include <optional>

#include "sqec/lattice.h"

namespace sqec {

struct PathResult {
  double weight = 0.0;
  std::vector<LineRef> lines;  // ordered from the query dot outward
  int boundary = -1;           // set when the far end is a boundary
};

// Exact shortest paths over a lattice graph (nonnegative weights). Scratch
// arrays are reused across queries; not thread-safe per instance.
class PathEngine {
 public:
  explicit PathEngine(const LatticeGraph& g) : g_(&g) {}

  // Minimum-weight path between two dots of the same event type.
  // Throws std::invalid_argument on mixed types, runtime_error when
  // disconnected.
  PathResult min_weight_path(const DotKey& a, const DotKey& b);

  // Minimum over all boundaries of the dot's type; equal-weight ties resolve
  // to the lowest boundary id. Throws when no boundary is reachable.
  PathResult boundary_distance(const DotKey& a);
  PathResult boundary_distance(const DotKey& a, int boundary);

  // All dots settled within `bound` of `a` (weight < bound), with exact
  // distances; used to build explicit graphs.
  std::vector<std::pair<DotKey, double>> dots_within(const DotKey& a,
                                                     double bound);

 private:
  struct Target {
    const DotKey* dot = nullptr;   // stop when settled
    int boundary = -1;             // -2 = any boundary
    double bound = std::numeric_limits<double>::infinity();
  };
  // Core search; returns the settled target info.
  struct Outcome {
    bool found = false;
    double weight = 0.0;
    int slot = -1;
    int boundary = -1;
    LineRef boundary_line;
  };
  Outcome run(const DotKey& source, const Target& t,
              std::vector<std::pair<DotKey, double>>* settled);
  void ensure_scratch();
  PathResult extract_path(const DotKey& source, int slot) const;

  const LatticeGraph* g_;
  std::vector<double> dist_;
  std::vector<int> mark_;
  std::vector<LineRef> pred_;
  int epoch_ = 0;
};

}  // namespace sqec
