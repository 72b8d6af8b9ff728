#include "sqec/matching.h"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <queue>
#include <sstream>

namespace sqec {

namespace {

std::atomic<uint64_t> next_matcher_id{1};

uint64_t pack_dot(const DotKey& d) {
  return (static_cast<uint64_t>(d.type) << 62) |
         (static_cast<uint64_t>(static_cast<uint32_t>(d.stab)) << 32) |
         static_cast<uint32_t>(d.round);
}

}  // namespace

MatcherState::MatcherState(const LatticeGraph& lattice, StabType type)
    : lattice_(&lattice),
      type_(type),
      paths_(std::make_unique<PathEngine>(lattice)),
      instance_id_(next_matcher_id.fetch_add(1)) {}

MatcherState::MatcherState(const MatchProblem& problem)
    : instance_id_(next_matcher_id.fetch_add(1)) {
  for (int i = 0; i < problem.num_vertices; ++i) {
    DotKey dot;
    if (!problem.dots.empty()) dot = problem.dots[i];
    add_vertex(dot);
  }
  for (const ProblemEdge& e : problem.edges) {
    if (e.v >= 0 && find_edge(e.u, e.v) >= 0)
      throw std::invalid_argument("duplicate edge in problem");
    j_new_edge(e.u, e.v, e.boundary, e.w);
  }
}

// ---------------------------------------------------------------------------
// Journal

void MatcherState::j_dual(int node, double v) {
  journal_.push_back({Undo::Dual, node, 0, nodes_[node].dual});
  nodes_[node].dual = v;
}
void MatcherState::j_match_field(int node, int e) {
  journal_.push_back({Undo::MatchField, node, nodes_[node].match_edge, 0});
  nodes_[node].match_edge = e;
}
void MatcherState::j_label(int node, uint8_t l) {
  journal_.push_back({Undo::Label, node, nodes_[node].label, 0});
  nodes_[node].label = l;
}
void MatcherState::j_tree_parent(int node, int e) {
  journal_.push_back(
      {Undo::TreeParentEdge, node, nodes_[node].tree_parent_edge, 0});
  nodes_[node].tree_parent_edge = e;
}
void MatcherState::j_parent(int node, int p) {
  journal_.push_back({Undo::ParentBlossom, node, nodes_[node].parent, 0});
  nodes_[node].parent = p;
}
void MatcherState::j_base_idx(int node, int b) {
  journal_.push_back({Undo::BaseIdx, node, nodes_[node].base_idx, 0});
  nodes_[node].base_idx = b;
}
void MatcherState::j_edge_matched(int e, bool m) {
  journal_.push_back({Undo::EdgeMatched, e, edges_[e].matched ? 1 : 0, 0});
  edges_[e].matched = m;
}
void MatcherState::j_dissolved(int node, bool d) {
  journal_.push_back({Undo::Dissolved, node, nodes_[node].dissolved ? 1 : 0, 0});
  nodes_[node].dissolved = d;
}
void MatcherState::j_tree_add(int node) {
  journal_.push_back({Undo::TreeAdd, node, 0, 0});
  tree_nodes_.push_back(node);
}
void MatcherState::j_tree_remove(int node) {
  journal_.push_back({Undo::TreeRemove, node, 0, 0});
  auto it = std::find(tree_nodes_.begin(), tree_nodes_.end(), node);
  assert(it != tree_nodes_.end());
  tree_nodes_.erase(it);
}
void MatcherState::j_root(int r) {
  journal_.push_back({Undo::RootSet, r, root_, 0});
  root_ = r;
}
int MatcherState::j_new_edge(int u, int v, int boundary, double w) {
  int id = static_cast<int>(edges_.size());
  edges_.push_back({u, v, boundary, w, false});
  incident_[u].push_back(id);
  if (v >= 0) incident_[v].push_back(id);
  edge_marked_.push_back(0);
  journal_.push_back({Undo::NewEdge, id, 0, 0});
  ++stats_.edges_created;
  return id;
}

void MatcherState::undo_one(const Undo& u) {
  switch (u.kind) {
    case Undo::Dual: nodes_[u.id].dual = u.old_d; break;
    case Undo::MatchField: nodes_[u.id].match_edge = u.old_i; break;
    case Undo::Label: nodes_[u.id].label = static_cast<uint8_t>(u.old_i); break;
    case Undo::TreeParentEdge: nodes_[u.id].tree_parent_edge = u.old_i; break;
    case Undo::ParentBlossom: nodes_[u.id].parent = u.old_i; break;
    case Undo::BaseIdx: nodes_[u.id].base_idx = u.old_i; break;
    case Undo::EdgeMatched: edges_[u.id].matched = u.old_i != 0; break;
    case Undo::NewEdge: {
      const Edge& e = edges_[u.id];
      assert(u.id + 1 == static_cast<int>(edges_.size()));
      assert(incident_[e.u].back() == u.id);
      incident_[e.u].pop_back();
      if (e.v >= 0) {
        assert(incident_[e.v].back() == u.id);
        incident_[e.v].pop_back();
      }
      edges_.pop_back();
      edge_marked_.pop_back();
      break;
    }
    case Undo::NewBlossom:
      assert(u.id + 1 == static_cast<int>(nodes_.size()));
      nodes_.pop_back();
      incident_.pop_back();
      break;
    case Undo::Dissolved: nodes_[u.id].dissolved = u.old_i != 0; break;
    case Undo::NewVertex: {
      assert(u.id + 1 == static_cast<int>(nodes_.size()));
      if (lattice_) vertex_at_dot_.erase(pack_dot(nodes_[u.id].dot));
      assert(vertices_.back() == u.id);
      vertices_.pop_back();
      incident_.pop_back();
      nodes_.pop_back();
      break;
    }
    case Undo::TreeAdd: {
      auto it = std::find(tree_nodes_.begin(), tree_nodes_.end(), u.id);
      assert(it != tree_nodes_.end());
      tree_nodes_.erase(it);
      break;
    }
    case Undo::TreeRemove: tree_nodes_.push_back(u.id); break;
    case Undo::RootSet: root_ = u.old_i; break;
  }
}

MatcherState::Token MatcherState::checkpoint() const {
  return {instance_id_, journal_base_ + journal_.size()};
}

void MatcherState::reverse_to(const Token& t) {
  if (t.owner != instance_id_)
    throw std::invalid_argument("checkpoint token from another matcher");
  if (t.pos < journal_base_ || t.pos > journal_base_ + journal_.size())
    throw std::invalid_argument("stale or future checkpoint token");
  while (journal_base_ + journal_.size() > t.pos) {
    undo_one(journal_.back());
    journal_.pop_back();
  }
  for (int e : marked_edges_) edge_marked_[e] = 0;
  marked_edges_.clear();
}

void MatcherState::forget_before(const Token& t) {
  if (t.owner != instance_id_ || t.pos < journal_base_ ||
      t.pos > journal_base_ + journal_.size())
    throw std::invalid_argument("bad token");
  size_t drop = t.pos - journal_base_;
  journal_.erase(journal_.begin(), journal_.begin() + drop);
  journal_base_ = t.pos;
}

// ---------------------------------------------------------------------------
// Structure helpers

int MatcherState::add_vertex(const DotKey& dot) {
  int id = static_cast<int>(nodes_.size());
  Node n;
  n.dot = dot;
  nodes_.push_back(std::move(n));
  vertices_.push_back(id);
  incident_.emplace_back();
  if (lattice_) {
    auto [it, fresh] = vertex_at_dot_.insert({pack_dot(dot), id});
    if (!fresh) throw std::invalid_argument("duplicate vertex at dot");
  }
  journal_.push_back({Undo::NewVertex, id, 0, 0});
  return id;
}

int MatcherState::top_of(int node) const {
  while (nodes_[node].parent >= 0) node = nodes_[node].parent;
  return node;
}

double MatcherState::z_of(int vertex) const {
  double z = 0.0;
  for (int n = vertex; n >= 0; n = nodes_[n].parent) z += nodes_[n].dual;
  return z;
}

ProblemEdge MatcherState::edge(int e) const {
  const Edge& ed = edges_.at(e);
  return {ed.u, ed.v, ed.boundary, ed.w};
}

double MatcherState::slack(int e) const {
  const Edge& ed = edges_[e];
  if (ed.v < 0) return ed.w - z_of(ed.u);
  // Duals count only for blossoms containing exactly one endpoint: shared
  // ancestors of the two chains contribute nothing.
  double s = ed.w;
  int chain_u[64];
  int len_u = 0;
  for (int n = ed.u; n >= 0; n = nodes_[n].parent) {
    assert(len_u < 64);
    chain_u[len_u++] = n;
  }
  int common = -1;
  for (int n = ed.v; n >= 0; n = nodes_[n].parent) {
    for (int i = 0; i < len_u; ++i)
      if (chain_u[i] == n) {
        common = n;
        break;
      }
    if (common >= 0) break;
    s -= nodes_[n].dual;
  }
  for (int i = 0; i < len_u && chain_u[i] != common; ++i)
    s -= nodes_[chain_u[i]].dual;
  return s;
}

int MatcherState::find_edge(int u, int v) const {
  const auto& inc =
      incident_[u].size() <= incident_[v].size() ? incident_[u] : incident_[v];
  for (int e : inc) {
    if ((edges_[e].u == u && edges_[e].v == v) ||
        (edges_[e].u == v && edges_[e].v == u))
      return e;
  }
  return -1;
}

bool MatcherState::is_matched(int vertex) const {
  return nodes_[top_of(vertex)].match_edge >= 0;
}

int MatcherState::other_end_node(int e, int node) const {
  const Edge& ed = edges_[e];
  if (ed.v < 0) return -1;  // boundary
  int tu = top_of(ed.u), tv = top_of(ed.v);
  return tu == node ? tv : tu;
}

bool MatcherState::contains(int node, int vertex) const {
  for (int n = vertex; n >= 0; n = nodes_[n].parent)
    if (n == node) return true;
  return false;
}

// The endpoint vertex of `e` lying inside `node` (at any nesting depth).
int MatcherState::vertex_in_node(int e, int node) const {
  const Edge& ed = edges_[e];
  if (contains(node, ed.u)) return ed.u;
  assert(ed.v >= 0 && contains(node, ed.v));
  return ed.v;
}

int MatcherState::immediate_child_containing(int blossom, int vertex) const {
  int n = vertex;
  while (nodes_[n].parent != blossom) {
    n = nodes_[n].parent;
    assert(n >= 0);
  }
  return n;
}

void MatcherState::for_vertices_in(int node,
                                   const std::function<void(int)>& fn) const {
  if (!nodes_[node].is_blossom) {
    fn(node);
    return;
  }
  for (int c : nodes_[node].cycle) for_vertices_in(c, fn);
}

// Rotates blossom bases so that `entry_vertex` becomes the exposed base
// vertex of `node`, re-pairing the odd cycles accordingly.
void MatcherState::make_base(int node, int entry_vertex) {
  if (!nodes_[node].is_blossom) {
    assert(node == entry_vertex);
    return;
  }
  int child = immediate_child_containing(node, entry_vertex);
  const auto& cyc = nodes_[node].cycle;
  const auto& cedges = nodes_[node].cycle_edges;
  int m = static_cast<int>(cyc.size());
  int child_idx =
      static_cast<int>(std::find(cyc.begin(), cyc.end(), child) - cyc.begin());
  if (child_idx != nodes_[node].base_idx) {
    for (int e : cedges)
      if (edges_[e].matched) j_edge_matched(e, false);
    j_base_idx(node, child_idx);
    for (int t = 1; t < m; t += 2) {
      int i = (child_idx + t) % m;
      int e = cedges[i];
      int c1 = cyc[i], c2 = cyc[(i + 1) % m];
      j_edge_matched(e, true);
      j_match_field(c1, e);
      j_match_field(c2, e);
      make_base(c1, vertex_in_node(e, c1));
      make_base(c2, vertex_in_node(e, c2));
    }
  }
  j_match_field(child, -1);
  make_base(child, entry_vertex);
}

void MatcherState::set_match_to(int node, int e, int entry_vertex) {
  if (nodes_[node].is_blossom) make_base(node, entry_vertex);
  j_match_field(node, e);
}

// ---------------------------------------------------------------------------
// Tree manipulations

void MatcherState::begin_tree(int vertex) {
  if (tree_active()) throw MatchingError("tree already active");
  int top = top_of(vertex);
  if (nodes_[top].match_edge >= 0)
    throw MatchingError("root must be unmatched");
  j_root(top);
  j_label(top, 1);
  j_tree_parent(top, -1);
  j_tree_add(top);
}

void MatcherState::destroy_tree() {
  for (int n : std::vector<int>(tree_nodes_)) {
    j_label(n, 0);
    j_tree_parent(n, -1);
    j_tree_remove(n);
  }
  j_root(-1);
  for (int e : marked_edges_) edge_marked_[e] = 0;
  marked_edges_.clear();
}

int MatcherState::tree_parent_node(int node) const {
  int pe = nodes_[node].tree_parent_edge;
  assert(pe >= 0);
  const Edge& ed = edges_[pe];
  int tu = top_of(ed.u);
  if (tu != node) return tu;
  assert(ed.v >= 0);
  return top_of(ed.v);
}

void MatcherState::grow(int e, int far_top) {
  // far_top is matched to another node via its matched edge.
  int mate_edge = nodes_[far_top].match_edge;
  assert(mate_edge >= 0 && edges_[mate_edge].v >= 0);
  int mate = other_end_node(mate_edge, far_top);
  assert(mate >= 0 && nodes_[mate].label == 0);
  j_label(far_top, 2);
  j_tree_parent(far_top, e);
  j_tree_add(far_top);
  j_label(mate, 1);
  j_tree_parent(mate, mate_edge);
  j_tree_add(mate);
}

void MatcherState::form_blossom(int e) {
  const Edge& ed = edges_[e];
  int u_top = top_of(ed.u), v_top = top_of(ed.v);
  assert(u_top != v_top);
  assert(nodes_[u_top].label == 1 && nodes_[v_top].label == 1);

  // Walk both tree paths to find the lowest common ancestor.
  std::vector<int> u_path{u_top};
  for (int n = u_top; n != root_;) {
    n = tree_parent_node(n);
    u_path.push_back(n);
  }
  std::vector<int> v_path;
  int lca = -1;
  for (int n = v_top;;) {
    if (std::find(u_path.begin(), u_path.end(), n) != u_path.end()) {
      lca = n;
      break;
    }
    v_path.push_back(n);
    n = tree_parent_node(n);
  }
  assert(lca >= 0);
  u_path.resize(std::find(u_path.begin(), u_path.end(), lca) -
                u_path.begin());  // nodes strictly below lca on u side

  // Cycle: lca, then down the u side to u_top, across e, back up the v side.
  std::vector<int> cycle{lca};
  std::vector<int> cedges;
  for (auto it = u_path.rbegin(); it != u_path.rend(); ++it) {
    cycle.push_back(*it);
    cedges.push_back(nodes_[*it].tree_parent_edge);
  }
  cedges.push_back(e);
  for (int n : v_path) {
    cycle.push_back(n);
    cedges.push_back(nodes_[n].tree_parent_edge);
  }
  // cedges currently lists, for position i >= 1, the edge between cycle[i]
  // and its tree parent; the layout above already orders them as
  // cycle[0]-cycle[1], cycle[1]-cycle[2], ..., cycle[last]-cycle[0].
  assert(cycle.size() == cedges.size());
  assert(cycle.size() % 2 == 1 && cycle.size() >= 3);

  int b = static_cast<int>(nodes_.size());
  Node bn;
  bn.is_blossom = true;
  bn.cycle = cycle;
  bn.cycle_edges = cedges;
  bn.base_idx = 0;
  bn.dual = 0.0;
  bn.match_edge = nodes_[lca].match_edge;
  bn.label = 1;
  bn.tree_parent_edge = nodes_[lca].tree_parent_edge;
  nodes_.push_back(std::move(bn));
  incident_.emplace_back();
  journal_.push_back({Undo::NewBlossom, b, 0, 0});

  for (int c : cycle) {
    j_parent(c, b);
    j_label(c, 0);
    j_tree_parent(c, -1);
    j_tree_remove(c);
  }
  j_match_field(lca, -1);
  j_tree_add(b);
  if (root_ == lca) j_root(b);
  ++stats_.blossoms_formed;
}

void MatcherState::expand_blossom(int b) {
  Node& bn = nodes_[b];
  assert(bn.is_blossom && !bn.dissolved);
  if (bn.label != 2) throw MatchingError("only inner blossoms expand");
  if (bn.dual > kSlackTolerance)
    throw MatchingError("blossom dual must be zero to expand");

  const int entry_edge = bn.tree_parent_edge;
  const int ext_edge = bn.match_edge;
  assert(entry_edge >= 0 && ext_edge >= 0);
  const int entry_vertex = vertex_in_node(entry_edge, b);

  const std::vector<int> cyc = bn.cycle;
  const std::vector<int> cedges = bn.cycle_edges;
  const int m = static_cast<int>(cyc.size());
  const int base = bn.base_idx;

  // Re-expose children.
  for (int c : cyc) j_parent(c, -1);
  j_dissolved(b, true);
  j_label(b, 0);
  j_tree_parent(b, -1);
  j_match_field(b, -1);
  j_tree_remove(b);

  // With the children re-exposed, the entry child is the top of the entry
  // vertex's remaining parent chain.
  int entry_child = top_of(entry_vertex);
  assert(std::find(cyc.begin(), cyc.end(), entry_child) != cyc.end());

  // Position of the entry child relative to the base.
  int entry_abs =
      static_cast<int>(std::find(cyc.begin(), cyc.end(), entry_child) -
                       cyc.begin());
  int j = (entry_abs - base + m) % m;

  // The even-length arc from the entry child to the base joins the tree.
  // j odd: ascend entry_abs, entry_abs+1, ..., base (+m); j even: descend.
  std::vector<int> arc{entry_child};
  std::vector<int> arc_edges;
  int idx = entry_abs;
  if (j % 2 == 1) {
    while (idx != base) {
      arc_edges.push_back(cedges[idx % m]);
      idx = (idx + 1) % m;
      arc.push_back(cyc[idx]);
    }
  } else if (j != 0) {
    while (idx != base) {
      arc_edges.push_back(cedges[(idx - 1 + m) % m]);
      idx = (idx - 1 + m) % m;
      arc.push_back(cyc[idx]);
    }
  }

  // Arc nodes alternate inner/outer starting and ending inner.
  for (size_t i = 0; i < arc.size(); ++i) {
    int n = arc[i];
    j_label(n, i % 2 == 0 ? 2 : 1);
    j_tree_parent(n, i == 0 ? entry_edge : arc_edges[i - 1]);
    j_tree_add(n);
  }
  assert(arc.size() % 2 == 1);
  j_match_field(arc.back(), ext_edge);

  ++stats_.blossoms_expanded;
}

void MatcherState::augment(int e, int far_top) {
  const Edge& ed = edges_[e];
  int o_top;  // tree-side endpoint
  if (ed.v < 0) {
    o_top = top_of(ed.u);
  } else {
    int tu = top_of(ed.u), tv = top_of(ed.v);
    o_top = (tu == far_top) ? tv : tu;
  }
  assert(nodes_[o_top].label == 1);

  // Far side bookkeeping first.
  if (far_top >= 0) {
    int old = nodes_[far_top].match_edge;
    if (old >= 0) {
      // Matched to a boundary: release it and thread the augmenting path
      // through to that boundary.
      assert(edges_[old].v < 0);
      j_edge_matched(old, false);
    }
    set_match_to(far_top, e, vertex_in_node(e, far_top));
  }
  j_edge_matched(e, true);
  set_match_to(o_top, e, vertex_in_node(e, o_top));

  // Flip labels along the path from o_top to the root.
  std::vector<int> path{o_top};
  for (int n = o_top; n != root_;) {
    n = tree_parent_node(n);
    path.push_back(n);
  }
  assert(path.size() % 2 == 1);
  for (size_t i = 0; i + 1 < path.size(); i += 2) {
    int matched_e = nodes_[path[i]].tree_parent_edge;    // inner->outer edge
    int unmatched_e = nodes_[path[i + 1]].tree_parent_edge;
    assert(edges_[matched_e].matched);
    assert(!edges_[unmatched_e].matched);
    j_edge_matched(matched_e, false);
    j_edge_matched(unmatched_e, true);
    int inner = path[i + 1];
    int outer2 = path[i + 2];
    set_match_to(inner, unmatched_e, vertex_in_node(unmatched_e, inner));
    set_match_to(outer2, unmatched_e, vertex_in_node(unmatched_e, outer2));
  }
  destroy_tree();
  ++stats_.augmentations;
}

// ---------------------------------------------------------------------------
// Candidate discovery

std::optional<MatcherState::TightEdge> MatcherState::find_tight_edge() {
  std::optional<TightEdge> best;
  auto consider = [&](int e, int near_top) {
    if (edge_marked_[e]) return;
    const Edge& ed = edges_[e];
    int cls, far = -1;
    if (ed.v < 0) {
      cls = 0;
    } else {
      int tu = top_of(ed.u), tv = top_of(ed.v);
      if (tu == tv) return;
      int far_top = tu == near_top ? tv : tu;
      if (nodes_[far_top].label == 1) {
        // Outer-outer: forms a blossom.
        cls = 2;
        far = far_top;
      } else if (nodes_[far_top].label == 2) {
        // Outer-inner tight edges never get tighter; mark and skip.
        if (std::abs(slack(e)) <= kSlackTolerance) {
          edge_marked_[e] = 1;
          marked_edges_.push_back(e);
        }
        return;
      } else {
        int me = nodes_[far_top].match_edge;
        if (me < 0 || edges_[me].v < 0)
          cls = 0;  // unmatched or boundary-matched: augmenting contact
        else
          cls = 1;
        far = far_top;
      }
    }
    if (std::abs(slack(e)) > kSlackTolerance) return;
    // Matching to an unmatched vertex is preferred over a boundary within
    // the augment class.
    auto key = [this](int c, int ed_id) {
      return std::tuple(c, edges_[ed_id].v < 0 ? 1 : 0, ed_id);
    };
    if (!best || key(cls, e) < key(best->cls, best->edge))
      best = TightEdge{cls, e, far};
  };
  for (int n : tree_nodes_) {
    if (nodes_[n].label != 1) continue;
    for_vertices_in(n, [&](int v) {
      for (int e : incident_[v]) {
        if (edges_[e].v >= 0 && other_end_node(e, n) == n) continue;
        consider(e, n);
      }
    });
  }
  return best;
}

std::optional<int> MatcherState::expandable_inner_blossom() const {
  std::optional<int> best;
  for (int n : tree_nodes_) {
    if (nodes_[n].label == 2 && nodes_[n].is_blossom &&
        nodes_[n].dual <= kSlackTolerance) {
      if (!best || n < *best) best = n;
    }
  }
  return best;
}

std::vector<MatcherState::Contact> MatcherState::explore(int node,
                                                         int t_forbid) {
  std::vector<Contact> out;
  if (!lattice_) return out;
  const LatticeGraph& g = *lattice_;
  size_t slots = static_cast<size_t>(g.slot_count());
  if (xdist_.size() < slots) {
    xdist_.resize(slots);
    xmark_.resize(slots, 0);
    xsrc_.resize(slots, -1);
  }
  ++xepoch_;
  const int open = 2 * xepoch_, closed = 2 * xepoch_ + 1;

  struct Entry {
    double key;
    int round, row, col;
    DotKey dot;
    bool operator>(const Entry& o) const {
      return std::tie(key, round, row, col) >
             std::tie(o.key, o.round, o.row, o.col);
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  auto push = [&](const DotKey& d, double key, int src) {
    int slot = g.slot_of(d);
    if (xmark_[slot] == closed) return;
    if (xmark_[slot] == open && xdist_[slot] <= key) return;
    xmark_[slot] = open;
    xdist_[slot] = key;
    xsrc_[slot] = src;
    Site s = g.stab_site(d.type, d.stab);
    heap.push({key, d.round, s.row, s.col, d});
  };

  for_vertices_in(node, [&](int v) {
    if (g.has_dot(nodes_[v].dot)) push(nodes_[v].dot, -z_of(v), v);
  });

  double chi_best = std::numeric_limits<double>::infinity();
  auto add = [&](Contact c) {
    chi_best = std::min(chi_best, c.chi);
    out.push_back(c);
  };

  while (!heap.empty()) {
    Entry e = heap.top();
    heap.pop();
    int slot = g.slot_of(e.dot);
    if (xmark_[slot] == closed) continue;
    // Any further pair contact costs at least (key - z_max)/2 growth, any
    // boundary or window contact at least key.
    if (std::min(e.key, (e.key - z_upper_) / 2) >= chi_best) break;
    xmark_[slot] = closed;
    ++stats_.explore_pops;
    int src = xsrc_[slot];

    if (e.dot.round >= t_forbid) {
      Contact c;
      c.kind = Contact::Window;
      c.chi = std::max(e.key, 0.0);
      c.from_vertex = src;
      c.round = e.dot.round;
      add(c);
      continue;  // forbidden data is never traversed
    }

    auto it = vertex_at_dot_.find(pack_dot(e.dot));
    if (it != vertex_at_dot_.end()) {
      int u = it->second;
      int u_top = top_of(u);
      if (u_top != node) {
        if (nodes_[u_top].label == 2) {
          // outer-inner: never tighter
        } else {
          Contact c;
          c.kind = Contact::Pair;
          c.slack = e.key - z_of(u);
          c.chi = std::max(
              c.slack / (nodes_[u_top].label == 1 ? 2.0 : 1.0), 0.0);
          c.from_vertex = src;
          c.to_vertex = u;
          add(c);
        }
      }
    }

    g.for_neighbors(e.dot, [&](const LineRef& line) {
      if (line.to_boundary()) {
        Contact c;
        c.kind = Contact::Boundary;
        c.slack = e.key + line.w;
        c.chi = std::max(c.slack, 0.0);
        c.from_vertex = src;
        c.boundary = line.boundary;
        add(c);
      } else {
        push(line.b, e.key + line.w, src);
      }
    });
  }

  std::sort(out.begin(), out.end(), [&](const Contact& a, const Contact& b) {
    auto key = [&](const Contact& c) {
      return std::tuple(c.chi, static_cast<int>(c.kind), c.to_vertex,
                        c.boundary, c.from_vertex);
    };
    return key(a) < key(b);
  });
  return out;
}

MatcherState::DeltaEvent MatcherState::compute_delta(int t_forbid) {
  DeltaEvent ev;
  // Within the slack tolerance, contacts outrank inner-dual bindings (a
  // contact edge materializes and lets the scan progress) and window
  // violations rank last (a violation fires only when strictly binding).
  auto rank = [](DeltaEvent::Binding b) {
    switch (b) {
      case DeltaEvent::NewContact: return 0;
      case DeltaEvent::InnerBlossomZero: return 1;
      case DeltaEvent::InnerVertexZero: return 2;
      case DeltaEvent::Window: return 3;
      default: return 4;
    }
  };
  auto consider = [&](double delta, DeltaEvent::Binding binding,
                      const Contact* c, int node) {
    bool take;
    if (ev.binding == DeltaEvent::None)
      take = true;
    else if (delta < ev.delta - kSlackTolerance)
      take = true;
    else if (delta > ev.delta + kSlackTolerance)
      take = false;
    else
      take = rank(binding) < rank(ev.binding);
    if (!take) return;
    ev.delta =
        ev.binding == DeltaEvent::None ? delta : std::min(delta, ev.delta);
    ev.binding = binding;
    if (c) ev.contact = *c;
    ev.node = node;
  };
  auto consider_contact = [&](const Contact& c) {
    consider(c.chi,
             c.kind == Contact::Window ? DeltaEvent::Window
                                       : DeltaEvent::NewContact,
             &c, -1);
  };

  for (int n : tree_nodes_) {
    if (nodes_[n].label == 2) {
      // Inner duals shrink; they bind at zero.
      consider(nodes_[n].dual,
               nodes_[n].is_blossom ? DeltaEvent::InnerBlossomZero
                                    : DeltaEvent::InnerVertexZero,
               nullptr, n);
      continue;
    }
    if (nodes_[n].label != 1) continue;
    if (lattice_) {
      for (const Contact& c : explore(n, t_forbid)) consider_contact(c);
    } else {
      for_vertices_in(n, [&](int v) {
        for (int e : incident_[v]) {
          if (edge_marked_[e]) continue;
          const Edge& ed = edges_[e];
          Contact c;
          c.from_vertex = v;
          if (ed.v < 0) {
            c.kind = Contact::Boundary;
            c.boundary = ed.boundary;
            c.slack = slack(e);
            c.chi = std::max(c.slack, 0.0);
          } else {
            int far = other_end_node(e, n);
            if (far == n) continue;
            if (nodes_[far].label == 2) continue;
            c.kind = Contact::Pair;
            c.to_vertex = ed.u == v ? ed.v : ed.u;
            c.slack = slack(e);
            c.chi =
                std::max(c.slack / (nodes_[far].label == 1 ? 2.0 : 1.0), 0.0);
          }
          consider_contact(c);
        }
      });
    }
  }
  return ev;
}

void MatcherState::apply_delta(double delta) {
  if (delta < 0) throw MatchingError("negative dual adjustment");
  for (int n : tree_nodes_) {
    if (nodes_[n].label == 1)
      j_dual(n, nodes_[n].dual + delta);
    else if (nodes_[n].label == 2)
      j_dual(n, nodes_[n].dual - delta);
  }
  ++stats_.dual_adjusts;
  bump_z_upper();
}

void MatcherState::bump_z_upper() {
  for (int n : tree_nodes_) {
    if (nodes_[n].label != 1) continue;
    double zmax = 0.0;
    for_vertices_in(n, [&](int v) { zmax = std::max(zmax, z_of(v)); });
    z_upper_ = std::max(z_upper_, zmax);
  }
}

int MatcherState::materialize_contact(const Contact& c) {
  if (c.kind == Contact::Pair) {
    int existing = find_edge(c.from_vertex, c.to_vertex);
    if (existing >= 0) return existing;
    double w;
    if (lattice_) {
      w = paths_->min_weight_path(nodes_[c.from_vertex].dot,
                                  nodes_[c.to_vertex].dot)
              .weight;
    } else {
      throw MatchingError("pair contact without lattice");
    }
    return j_new_edge(c.from_vertex, c.to_vertex, -1, w);
  }
  assert(c.kind == Contact::Boundary);
  for (int e : incident_[c.from_vertex]) {
    if (edges_[e].v < 0 && edges_[e].boundary == c.boundary) return e;
  }
  double w =
      paths_->boundary_distance(nodes_[c.from_vertex].dot, c.boundary).weight;
  return j_new_edge(c.from_vertex, -1, c.boundary, w);
}

// ---------------------------------------------------------------------------
// The step loop (the numbered algorithm)

MatcherState::Step MatcherState::step(int t_forbid) {
  if (!tree_active()) throw MatchingError("no active tree");

  if (auto te = find_tight_edge()) {
    switch (te->cls) {
      case 0: {
        int far = -1;
        const Edge& ed = edges_[te->edge];
        if (ed.v >= 0) far = te->far_top;
        augment(te->edge, far);
        return {Step::Augmented, 0.0, te->edge, -1};
      }
      case 1:
        grow(te->edge, te->far_top);
        return {Step::Grew, 0.0, te->edge, te->far_top};
      default:
        form_blossom(te->edge);
        return {Step::Blossomed, 0.0, te->edge,
                static_cast<int>(nodes_.size()) - 1};
    }
  }

  if (auto b = expandable_inner_blossom()) {
    expand_blossom(*b);
    return {Step::Expanded, 0.0, -1, *b};
  }

  DeltaEvent ev = compute_delta(t_forbid);
  if (ev.binding == DeltaEvent::None)
    throw MatchingError(
        "structural error: vertex has no boundary and no partner");
  if (ev.binding == DeltaEvent::Window) {
    return {Step::WindowViolation, ev.delta, -1, -1};
  }
  apply_delta(ev.delta);
  if (ev.binding == DeltaEvent::NewContact) materialize_contact(ev.contact);
  return {Step::DualAdjusted, ev.delta, -1, ev.node};
}

MatcherState::Outcome MatcherState::attempt_match(int vertex, int t_forbid) {
  if (is_matched(vertex)) return Outcome::AlreadyMatched;
  Token token = checkpoint();
  begin_tree(vertex);
  const int64_t guard =
      1000 + 200 * static_cast<int64_t>(vertices_.size());
  int64_t steps = 0;
  while (true) {
    if (++steps > guard) throw MatchingError("matching failed to progress");
    Step s = step(t_forbid);
    if (s.kind == Step::Augmented) return Outcome::Augmented;
    if (s.kind == Step::WindowViolation) {
      reverse_to(token);
      ++stats_.reversals;
      return Outcome::Deferred;
    }
  }
}

std::vector<int> MatcherState::run_all(int t_forbid) {
  std::vector<int> order = vertices_;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const DotKey &da = nodes_[a].dot, &db = nodes_[b].dot;
    auto ka = lattice_ ? lattice_->order_key(da)
                       : std::tuple(da.round, a, 0, 0);
    auto kb = lattice_ ? lattice_->order_key(db)
                       : std::tuple(db.round, b, 0, 0);
    return std::tie(ka, a) < std::tie(kb, b);
  });
  std::vector<int> deferred;
  for (int v : order) {
    if (attempt_match(v, t_forbid) == Outcome::Deferred) deferred.push_back(v);
  }
  return deferred;
}

// ---------------------------------------------------------------------------
// Results, certificate, fingerprint

namespace {
void resolve_cover(const MatcherState& st, int node, int external_edge,
                   std::vector<int>& vertex_edge);
}

MatchResult MatcherState::result() const {
  MatchResult res;
  res.stats = stats_;
  std::vector<int> vertex_edge(nodes_.size(), -1);
  for (int v : vertices_) {
    int top = top_of(v);
    if (nodes_[top].match_edge < 0)
      throw MatchingError("matching incomplete");
  }
  // Walk each top node once.
  std::vector<char> seen(nodes_.size(), 0);
  for (int v : vertices_) {
    int top = top_of(v);
    if (seen[top]) continue;
    seen[top] = 1;
    resolve_cover(*this, top, nodes_[top].match_edge, vertex_edge);
  }
  std::vector<char> edge_done(edges_.size(), 0);
  for (int v : vertices_) {
    int e = vertex_edge[v];
    assert(e >= 0);
    if (edge_done[e]) continue;
    edge_done[e] = 1;
    MatchedPair p;
    p.u = std::min(edges_[e].u, edges_[e].v >= 0 ? edges_[e].v : edges_[e].u);
    p.v = edges_[e].v >= 0 ? std::max(edges_[e].u, edges_[e].v) : -1;
    p.boundary = edges_[e].boundary;
    p.weight = edges_[e].w;
    res.pairs.push_back(p);
  }
  // Canonical accumulation order (ascending lower endpoint) so that equal
  // matchings produce bit-identical totals across drivers and the oracle.
  std::sort(res.pairs.begin(), res.pairs.end(),
            [](const MatchedPair& a, const MatchedPair& b) {
              return std::tie(a.u, a.v, a.boundary) <
                     std::tie(b.u, b.v, b.boundary);
            });
  for (const MatchedPair& p : res.pairs) res.total_weight += p.weight;
  return res;
}

namespace {
void resolve_cover(const MatcherState& st, int node, int external_edge,
                   std::vector<int>& vertex_edge) {
  if (!st.is_blossom(node)) {
    assert(vertex_edge[node] == -1);
    vertex_edge[node] = external_edge;
    return;
  }
  const auto& cyc = st.blossom_cycle(node);
  for (int c : cyc) {
    int me = st.match_edge_of(c);
    if (me >= 0) {
      resolve_cover(st, c, me, vertex_edge);
    } else {
      resolve_cover(st, c, external_edge, vertex_edge);
    }
  }
}
}  // namespace

MatcherState::Certificate MatcherState::validate(int implicit_samples,
                                                 Rng* rng) const {
  Certificate cert;
  auto fail = [&](bool& flag, const std::string& msg) {
    flag = false;
    cert.violations.push_back(msg);
  };

  // (a) perfect cover
  std::vector<int> vertex_edge(nodes_.size(), -1);
  std::vector<char> seen(nodes_.size(), 0);
  for (int v : vertices_) {
    int top = top_of(v);
    if (nodes_[top].match_edge < 0) {
      fail(cert.perfect, "unmatched vertex " + std::to_string(v));
      continue;
    }
    if (!seen[top]) {
      seen[top] = 1;
      resolve_cover(*this, top, nodes_[top].match_edge, vertex_edge);
    }
  }
  if (cert.perfect) {
    for (int v : vertices_) {
      int e = vertex_edge[v];
      if (e < 0 || (edges_[e].u != v && edges_[e].v != v))
        fail(cert.perfect, "vertex not covered by its edge");
      else if (!edges_[e].matched)
        fail(cert.perfect, "cover edge not marked matched");
    }
  }

  // (b) dual feasibility
  for (size_t e = 0; e < edges_.size(); ++e) {
    if (slack(static_cast<int>(e)) < -kSlackTolerance)
      fail(cert.feasible, "negative slack on edge " + std::to_string(e));
  }
  for (size_t n = 0; n < nodes_.size(); ++n) {
    if (nodes_[n].is_blossom && nodes_[n].dissolved) continue;
    if (nodes_[n].dual < -kSlackTolerance)
      fail(cert.feasible, "negative dual on node " + std::to_string(n));
  }
  if (lattice_) {
    PathEngine audit(*lattice_);
    for (int v : vertices_) {
      double bd = audit.boundary_distance(nodes_[v].dot).weight;
      if (z_of(v) > bd + kSlackTolerance)
        fail(cert.feasible, "dual exceeds boundary distance at vertex " +
                                std::to_string(v));
    }
    if (implicit_samples > 0 && rng && vertices_.size() >= 2) {
      for (int s = 0; s < implicit_samples; ++s) {
        int a = vertices_[(*rng)() % vertices_.size()];
        int b = vertices_[(*rng)() % vertices_.size()];
        if (a == b || top_of(a) == top_of(b)) continue;
        double w = audit.min_weight_path(nodes_[a].dot, nodes_[b].dot).weight;
        if (z_of(a) + z_of(b) > w + kSlackTolerance)
          fail(cert.feasible, "implicit edge violated");
      }
    }
  }

  // (c) complementary slackness
  for (size_t e = 0; e < edges_.size(); ++e) {
    if (edges_[e].matched &&
        std::abs(slack(static_cast<int>(e))) > kSlackTolerance)
      fail(cert.complementary, "matched edge not tight: " + std::to_string(e));
  }
  for (size_t n = 0; n < nodes_.size(); ++n) {
    const Node& b = nodes_[n];
    if (!b.is_blossom || b.dissolved) continue;
    if (b.dual <= kSlackTolerance) continue;
    // Full blossom: exactly one matched edge crosses its boundary.
    std::vector<char> inside(nodes_.size(), 0);
    for_vertices_in(static_cast<int>(n), [&](int v) { inside[v] = 1; });
    int crossing = 0;
    for (size_t e = 0; e < edges_.size(); ++e) {
      if (!edges_[e].matched) continue;
      int cu = inside[edges_[e].u];
      int cv = edges_[e].v >= 0 ? inside[edges_[e].v] : 0;
      if (cu + cv == 1) ++crossing;
    }
    if (crossing != 1)
      fail(cert.complementary,
           "blossom with positive dual is not full: " + std::to_string(n));
  }
  return cert;
}

std::string MatcherState::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << "root=" << root_ << ";nodes=" << nodes_.size() << ";";
  for (size_t n = 0; n < nodes_.size(); ++n) {
    const Node& nd = nodes_[n];
    os << n << ":b" << nd.is_blossom << "d" << nd.dissolved << "y" << nd.dual
       << "p" << nd.parent << "m" << nd.match_edge << "l" << int(nd.label)
       << "t" << nd.tree_parent_edge << "B" << nd.base_idx;
    if (nd.is_blossom) {
      os << "c[";
      for (int c : nd.cycle) os << c << ",";
      os << "]e[";
      for (int e : nd.cycle_edges) os << e << ",";
      os << "]";
    } else {
      os << "dot(" << int(nd.dot.type) << "," << nd.dot.stab << ","
         << nd.dot.round << ")";
    }
    os << ";";
  }
  os << "edges=" << edges_.size() << ";";
  for (size_t e = 0; e < edges_.size(); ++e) {
    const Edge& ed = edges_[e];
    os << e << ":" << ed.u << "," << ed.v << "," << ed.boundary << ","
       << ed.w << "," << ed.matched << ";";
  }
  std::vector<int> tree = tree_nodes_;
  std::sort(tree.begin(), tree.end());
  os << "tree=[";
  for (int t : tree) os << t << ",";
  os << "]";
  return os.str();
}

// ---------------------------------------------------------------------------
// Construction helpers and drivers

MatchProblem build_complete_graph(const LatticeGraph& lattice,
                                  const std::vector<DotKey>& vertices) {
  MatchProblem prob;
  prob.num_vertices = static_cast<int>(vertices.size());
  prob.dots = vertices;
  PathEngine pe(lattice);

  std::vector<double> bd(vertices.size());
  double bd_max = 0.0;
  for (size_t i = 0; i < vertices.size(); ++i) {
    PathResult r = pe.boundary_distance(vertices[i]);
    bd[i] = r.weight;
    bd_max = std::max(bd_max, bd[i]);
    prob.edges.push_back({static_cast<int>(i), -1, r.boundary, bd[i]});
  }

  std::unordered_map<uint64_t, int> at_dot;
  for (size_t i = 0; i < vertices.size(); ++i)
    at_dot[pack_dot(vertices[i])] = static_cast<int>(i);

  for (size_t i = 0; i < vertices.size(); ++i) {
    // Any pair whose path weight reaches bd_u + bd_v can never appear in a
    // minimum-weight matching; the search stops at the largest useful span.
    auto reach = pe.dots_within(vertices[i], bd[i] + bd_max);
    for (const auto& [dot, w] : reach) {
      auto it = at_dot.find(pack_dot(dot));
      if (it == at_dot.end()) continue;
      int j = it->second;
      if (j <= static_cast<int>(i)) continue;
      if (w < bd[i] + bd[j])
        prob.edges.push_back({static_cast<int>(i), j, -1, w});
    }
  }
  return prob;
}

MatchResult brute_force_mwpm(const MatchProblem& problem) {
  const int n = problem.num_vertices;
  if (n > 12) throw std::invalid_argument("oracle limited to 12 vertices");

  // Adjacency with best boundary edge per vertex.
  std::vector<std::vector<std::pair<int, double>>> pair_edges(n);
  std::vector<std::pair<double, int>> best_boundary(
      n, {std::numeric_limits<double>::infinity(), -1});
  for (const ProblemEdge& e : problem.edges) {
    if (e.v < 0) {
      if (e.w < best_boundary[e.u].first)
        best_boundary[e.u] = {e.w, e.boundary};
    } else {
      pair_edges[e.u].push_back({e.v, e.w});
      pair_edges[e.v].push_back({e.u, e.w});
    }
  }

  std::vector<int> partner(n, -2);  // -2 unassigned, -1 boundary
  std::vector<int> best_partner;
  double best = std::numeric_limits<double>::infinity();

  // Canonical accumulation order for exact weight comparisons: assignments
  // are explored lowest-vertex-first, so weights add in a fixed order.
  std::function<void(int, double)> go = [&](int v, double acc) {
    if (acc >= best) return;
    while (v < n && partner[v] != -2) ++v;
    if (v == n) {
      best = acc;
      best_partner = partner;
      return;
    }
    if (best_boundary[v].second >= 0) {
      partner[v] = -1;
      go(v + 1, acc + best_boundary[v].first);
      partner[v] = -2;
    }
    for (const auto& [u, w] : pair_edges[v]) {
      if (u < v || partner[u] != -2) continue;
      partner[v] = u;
      partner[u] = v;
      go(v + 1, acc + w);
      partner[v] = partner[u] = -2;
    }
  };
  go(0, 0.0);
  if (best_partner.empty() && n > 0)
    throw MatchingError("oracle: infeasible problem");

  MatchResult res;
  res.total_weight = 0.0;
  std::vector<char> done(n, 0);
  for (int v = 0; v < n; ++v) {
    if (done[v]) continue;
    MatchedPair p;
    if (best_partner[v] == -1) {
      p.u = v;
      p.boundary = best_boundary[v].second;
      p.weight = best_boundary[v].first;
      done[v] = 1;
    } else {
      p.u = v;
      p.v = best_partner[v];
      for (const auto& [u, w] : pair_edges[v])
        if (u == p.v) {
          p.weight = w;
          break;
        }
      done[v] = done[p.v] = 1;
    }
    res.pairs.push_back(p);
  }
  // Same canonical order as the search accumulation.
  for (int v = 0; v < n; ++v) {
    if (best_partner[v] == -1)
      res.total_weight += best_boundary[v].first;
    else if (best_partner[v] > v) {
      for (const auto& [u, w] : pair_edges[v])
        if (u == best_partner[v]) {
          res.total_weight += w;
          break;
        }
    }
  }
  return res;
}

MatchResult run_matching(const MatchProblem& problem) {
  MatcherState st(problem);
  st.run_all();
  return st.result();
}

MatchResult run_matching(const LatticeGraph& lattice, StabType type,
                         const std::vector<DotKey>& vertices, MatchMode mode) {
  if (mode == MatchMode::Complete) {
    MatchProblem prob = build_complete_graph(lattice, vertices);
    return run_matching(prob);
  }
  MatcherState st(lattice, type);
  for (const DotKey& d : vertices) st.add_vertex(d);
  st.run_all();
  return st.result();
}

}  // namespace sqec
