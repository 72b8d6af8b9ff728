#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <unordered_map>

#include "sqec/paths.h"

namespace sqec {

// Tightness tolerance on edge slack. Weights are sums of -ln(p) terms of
// magnitude ~1-10, far above this.
inline constexpr double kSlackTolerance = 1e-9;

// Explicit weighted matching problem with boundary edges (complete-graph
// driver, oracle, standalone harness).
struct ProblemEdge {
  int u = -1;
  int v = -1;        // -1 for boundary edges
  int boundary = -1;
  double w = 0.0;
};

struct MatchProblem {
  int num_vertices = 0;
  std::vector<ProblemEdge> edges;
  std::vector<DotKey> dots;  // optional vertex identities (size 0 or n)
};

struct MatchedPair {
  int u = -1;
  int v = -1;        // -1 when matched to a boundary
  int boundary = -1;
  double weight = 0.0;
};

struct MatcherStats {
  int64_t edges_created = 0;
  int64_t augmentations = 0;
  int64_t blossoms_formed = 0;
  int64_t blossoms_expanded = 0;
  int64_t dual_adjusts = 0;
  int64_t reversals = 0;
  int64_t explore_pops = 0;
};

struct MatchResult {
  double total_weight = 0.0;
  std::vector<MatchedPair> pairs;
  MatcherStats stats;
};

enum class MatchMode { Complete, EdgesOnDemand };

struct MatchingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Minimum-weight perfect matching with boundaries: primal-dual blossom
// algorithm over either an explicit graph or an implicit complete graph
// whose edges are minimum-weight lattice paths, materialized on demand when
// exploratory regions touch. Supports journaled reverse execution.
class MatcherState {
 public:
  // Edges-on-demand over a lattice (one event type).
  MatcherState(const LatticeGraph& lattice, StabType type);
  // Explicit problem; all edges materialized up front.
  explicit MatcherState(const MatchProblem& problem);

  MatcherState(const MatcherState&) = delete;
  MatcherState& operator=(const MatcherState&) = delete;

  // ---- vertices ----
  int add_vertex(const DotKey& dot);
  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int vertex_id(int i) const { return vertices_[i]; }
  bool is_matched(int vertex) const;
  const DotKey& dot_of(int vertex) const { return nodes_[vertex].dot; }

  // ---- matching attempts ----
  enum class Outcome { AlreadyMatched, Augmented, Deferred };
  // One attempt rooted at `vertex`. Exploratory growth that would swallow a
  // dot at round >= t_forbid reverses the attempt and defers it.
  Outcome attempt_match(int vertex,
                        int t_forbid = std::numeric_limits<int>::max());
  // Attempts for every unmatched vertex, oldest (round, row, col) first.
  // Returns vertices deferred by window violations, in order.
  std::vector<int> run_all(int t_forbid = std::numeric_limits<int>::max());

  // ---- manual stepping (exposes the individual tree manipulations) ----
  struct Step {
    enum Kind {
      Augmented,
      Grew,
      Blossomed,
      Expanded,
      DualAdjusted,
      WindowViolation,
    } kind;
    double delta = 0.0;
    int edge = -1;
    int node = -1;
  };
  void begin_tree(int vertex);
  Step step(int t_forbid = std::numeric_limits<int>::max());
  bool tree_active() const { return root_ != -1; }

  // ---- exploration (edges-on-demand contact discovery) ----
  struct Contact {
    enum Kind { Pair, Boundary, Window, InnerSkip } kind;
    double chi = 0.0;      // outer-node growth at which contact happens
    double slack = 0.0;
    int from_vertex = -1;
    int to_vertex = -1;
    int boundary = -1;
    int round = 0;         // window contacts: the forbidden round touched
  };
  // Contact candidates of an outer node's exploratory region at the current
  // duals, cheapest first. Region radius equals the node's accumulated dual.
  std::vector<Contact> explore(int node,
                               int t_forbid = std::numeric_limits<int>::max());

  // ---- duals & edges ----
  double vertex_dual(int vertex) const { return nodes_[vertex].dual; }
  double node_dual(int node) const { return nodes_[node].dual; }
  double z_of(int vertex) const;
  double slack(int edge) const;
  bool is_tight(int edge) const {
    return std::abs(slack(edge)) <= kSlackTolerance;
  }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  ProblemEdge edge(int e) const;
  bool edge_matched(int e) const { return edges_[e].matched; }
  int find_edge(int u, int v) const;

  // ---- structure inspection ----
  int top_of(int node) const;
  int parent_of(int node) const { return nodes_[node].parent; }
  bool is_blossom(int node) const { return nodes_[node].is_blossom; }
  bool blossom_alive(int node) const {
    return nodes_[node].is_blossom && !nodes_[node].dissolved;
  }
  const std::vector<int>& blossom_cycle(int node) const {
    return nodes_[node].cycle;
  }
  int node_label(int node) const { return nodes_[node].label; }
  int tree_root() const { return root_; }
  std::vector<int> tree_members() const { return tree_nodes_; }
  int match_edge_of(int node) const { return nodes_[node].match_edge; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  // ---- results & certificate ----
  MatchResult result() const;
  const MatcherStats& stats() const { return stats_; }

  struct Certificate {
    bool perfect = true;
    bool feasible = true;
    bool complementary = true;
    std::vector<std::string> violations;
    bool ok() const { return perfect && feasible && complementary; }
  };
  // Checks perfect cover, dual feasibility (materialized edges, boundary
  // audit, sampled implicit edges) and complementary slackness.
  Certificate validate(int implicit_samples = 0, Rng* rng = nullptr) const;

  // ---- checkpoint / reverse execution ----
  struct TokenImpl {
    uint64_t owner = 0;
    uint64_t pos = 0;
  };
  using Token = TokenImpl;
  Token checkpoint() const;
  void reverse_to(const Token& t);
  // Drops undo information older than the token (memory reclamation on
  // endless streams); earlier tokens become stale.
  void forget_before(const Token& t);

  // Full semantic state dump for reverse-execution identity tests.
  std::string fingerprint() const;

  const LatticeGraph* lattice() const { return lattice_; }
  StabType type() const { return type_; }

 private:
  struct Node {
    bool is_blossom = false;
    bool dissolved = false;
    double dual = 0.0;
    int parent = -1;
    int match_edge = -1;
    DotKey dot;
    uint8_t label = 0;  // 0 free, 1 outer, 2 inner
    int tree_parent_edge = -1;
    int base_idx = 0;
    std::vector<int> cycle;        // blossom children, cyclic order
    std::vector<int> cycle_edges;  // cycle_edges[i]: cycle[i] -- cycle[i+1]
  };

  struct Edge {
    int u = -1, v = -1, boundary = -1;
    double w = 0.0;
    bool matched = false;
  };

  struct Undo {
    enum Kind : uint8_t {
      Dual,
      MatchField,
      Label,
      TreeParentEdge,
      ParentBlossom,
      BaseIdx,
      EdgeMatched,
      NewEdge,
      NewBlossom,
      Dissolved,
      NewVertex,
      TreeAdd,
      TreeRemove,
      RootSet,
    } kind;
    int32_t id = 0;
    int32_t old_i = 0;
    double old_d = 0.0;
  };

  // journaled mutators
  void j_dual(int node, double v);
  void j_match_field(int node, int e);
  void j_label(int node, uint8_t l);
  void j_tree_parent(int node, int e);
  void j_parent(int node, int p);
  void j_base_idx(int node, int b);
  void j_edge_matched(int e, bool m);
  void j_dissolved(int node, bool d);
  void j_tree_add(int node);
  void j_tree_remove(int node);
  void j_root(int r);
  int j_new_edge(int u, int v, int boundary, double w);
  void undo_one(const Undo& u);

  // structure helpers
  int other_end_node(int edge, int node) const;
  bool contains(int node, int vertex) const;
  int vertex_in_node(int edge, int node) const;
  int immediate_child_containing(int blossom, int vertex) const;
  void for_vertices_in(int node, const std::function<void(int)>& fn) const;
  void make_base(int node, int entry_vertex);
  void set_match_to(int node, int edge, int entry_vertex);

  // algorithm pieces
  struct DeltaEvent {
    double delta = std::numeric_limits<double>::infinity();
    enum Binding {
      None,
      NewContact,
      InnerBlossomZero,
      InnerVertexZero,
      Window
    } binding = None;
    Contact contact;
    int node = -1;
  };
  struct TightEdge {
    int cls = -1;  // 0 augment, 1 grow, 2 blossom
    int edge = -1;
    int far_top = -1;
  };
  std::optional<TightEdge> find_tight_edge();
  std::optional<int> expandable_inner_blossom() const;
  DeltaEvent compute_delta(int t_forbid);
  void apply_delta(double delta);
  void grow(int edge, int far_top);
  void form_blossom(int edge);
  void expand_blossom(int blossom);
  void augment(int edge, int far_top);
  void destroy_tree();
  int materialize_contact(const Contact& c);
  int tree_parent_node(int node) const;
  double max_z_upper() const { return z_upper_; }
  void bump_z_upper();

  const LatticeGraph* lattice_ = nullptr;
  StabType type_ = StabType::Z;
  std::unique_ptr<PathEngine> paths_;

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> incident_;  // per vertex
  std::vector<int> vertices_;
  std::unordered_map<uint64_t, int> vertex_at_dot_;

  int root_ = -1;
  std::vector<int> tree_nodes_;
  std::vector<int> marked_edges_;           // cache, cleared on reversal
  std::vector<uint8_t> edge_marked_;

  std::vector<Undo> journal_;
  uint64_t journal_base_ = 0;
  uint64_t instance_id_ = 0;
  double z_upper_ = 0.0;

  // explore scratch
  mutable std::vector<double> xdist_;
  mutable std::vector<int> xmark_;
  mutable std::vector<int> xsrc_;
  mutable int xepoch_ = 0;

  MatcherStats stats_;
};

// Explicit graph from lattice vertices: pairwise edges kept only when the
// path beats matching both endpoints to their boundaries (any such edge can
// never appear in a minimum-weight matching), plus one boundary edge per
// vertex.
MatchProblem build_complete_graph(const LatticeGraph& lattice,
                                  const std::vector<DotKey>& vertices);

// Exhaustive oracle over all pairings and boundary assignments; <= 12
// vertices.
MatchResult brute_force_mwpm(const MatchProblem& problem);

// One-shot drivers.
MatchResult run_matching(const MatchProblem& problem);
MatchResult run_matching(const LatticeGraph& lattice, StabType type,
                         const std::vector<DotKey>& vertices, MatchMode mode);

}  // namespace sqec
