#include "sqec/paths.h"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace sqec {

namespace {

struct HeapEntry {
  double key;
  int round, row, col, type;
  DotKey dot;
  bool operator>(const HeapEntry& o) const {
    return std::tie(key, round, row, col, type) >
           std::tie(o.key, o.round, o.row, o.col, o.type);
  }
};

}  // namespace

void PathEngine::ensure_scratch() {
  size_t n = static_cast<size_t>(g_->slot_count());
  if (dist_.size() < n) {
    dist_.resize(n);
    mark_.resize(n, 0);
    pred_.resize(n);
  }
}

PathEngine::Outcome PathEngine::run(
    const DotKey& source, const Target& t,
    std::vector<std::pair<DotKey, double>>* settled) {
  ensure_scratch();
  ++epoch_;
  const int open = epoch_ * 2, closed = epoch_ * 2 + 1;

  std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> heap;
  auto push = [&](const DotKey& d, double key, const LineRef& via) {
    int slot = g_->slot_of(d);
    if (mark_[slot] == closed) return;
    if (mark_[slot] == open && dist_[slot] <= key) return;
    mark_[slot] = open;
    dist_[slot] = key;
    pred_[slot] = via;
    Site s = g_->stab_site(d.type, d.stab);
    heap.push({key, d.round, s.row, s.col, static_cast<int>(d.type), d});
  };

  Outcome best_boundary;  // best boundary candidate seen so far
  auto consider_boundary = [&](double key, const LineRef& line) {
    if (t.boundary == -1) return;
    if (t.boundary >= 0 && line.boundary != t.boundary) return;
    if (!best_boundary.found || key < best_boundary.weight ||
        (key == best_boundary.weight &&
         line.boundary < best_boundary.boundary)) {
      best_boundary.found = true;
      best_boundary.weight = key;
      best_boundary.boundary = line.boundary;
      best_boundary.boundary_line = line;
    }
  };

  LineRef none;
  push(source, 0.0, none);
  while (!heap.empty()) {
    HeapEntry e = heap.top();
    heap.pop();
    int slot = g_->slot_of(e.dot);
    if (mark_[slot] == closed) continue;
    // A settled boundary candidate cheaper than every remaining dot wins.
    if (best_boundary.found && best_boundary.weight <= e.key) break;
    if (e.key >= t.bound) break;
    mark_[slot] = closed;
    if (settled) settled->push_back({e.dot, e.key});
    if (t.dot && e.dot == *t.dot) {
      Outcome out;
      out.found = true;
      out.weight = e.key;
      out.slot = slot;
      return out;
    }
    g_->for_neighbors(e.dot, [&](const LineRef& line) {
      if (line.to_boundary()) {
        consider_boundary(e.key + line.w, line);
      } else {
        push(line.b, e.key + line.w, line);
      }
    });
  }
  if (best_boundary.found && best_boundary.weight < t.bound)
    return best_boundary;
  return {};
}

PathResult PathEngine::extract_path(const DotKey& source, int slot) const {
  PathResult res;
  std::vector<LineRef> rev;
  DotKey cur_dot;
  int cur = slot;
  while (true) {
    const LineRef& via = pred_[cur];
    if (via.line_id < 0) break;  // reached the source
    rev.push_back(via);
    cur_dot = via.a;
    cur = g_->slot_of(cur_dot);
    if (via.a == source) break;
  }
  res.lines.assign(rev.rbegin(), rev.rend());
  return res;
}

PathResult PathEngine::min_weight_path(const DotKey& a, const DotKey& b) {
  if (a.type != b.type)
    throw std::invalid_argument("path endpoints of different event types");
  if (!g_->has_dot(a) || !g_->has_dot(b))
    throw std::invalid_argument("path endpoint is not a lattice dot");
  if (a == b) return {};
  Target t;
  t.dot = &b;
  Outcome out = run(a, t, nullptr);
  if (!out.found) throw std::runtime_error("dots are disconnected");
  PathResult res = extract_path(a, out.slot);
  res.weight = out.weight;
  return res;
}

PathResult PathEngine::boundary_distance(const DotKey& a) {
  Target t;
  t.boundary = -2;
  Outcome out = run(a, t, nullptr);
  if (!out.found) throw std::runtime_error("no boundary reachable");
  PathResult res = extract_path(a, g_->slot_of(out.boundary_line.a));
  res.lines.push_back(out.boundary_line);
  res.weight = out.weight;
  res.boundary = out.boundary;
  return res;
}

PathResult PathEngine::boundary_distance(const DotKey& a, int boundary) {
  Target t;
  t.boundary = boundary;
  Outcome out = run(a, t, nullptr);
  if (!out.found) throw std::runtime_error("boundary not reachable");
  PathResult res = extract_path(a, g_->slot_of(out.boundary_line.a));
  res.lines.push_back(out.boundary_line);
  res.weight = out.weight;
  res.boundary = out.boundary;
  return res;
}

std::vector<std::pair<DotKey, double>> PathEngine::dots_within(const DotKey& a,
                                                               double bound) {
  std::vector<std::pair<DotKey, double>> settled;
  Target t;
  t.bound = bound;
  run(a, t, &settled);
  return settled;
}

}  // namespace sqec
