#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "sqec/sim.h"

namespace sqec {

// Space-time location where a detection event can occur.
struct DotKey {
  StabType type = StabType::Z;
  int stab = -1;   // stabilizer index within its type
  int round = 0;
  bool operator==(const DotKey&) const = default;
  auto operator<=>(const DotKey&) const = default;
};

// w = -ln(p_line). Rejects probabilities outside (0, 1].
double line_weight(double p_line);

// A line as seen during graph traversal: from `a` to either dot `b` or a
// boundary. `anchor` is the round of the line's earliest endpoint and
// `line_id` identifies the underlying template or explicit line.
struct LineRef {
  DotKey a;
  DotKey b;
  int boundary = -1;
  double p = 0.0;
  double w = 0.0;
  int anchor = 0;
  int line_id = -1;
  bool to_boundary() const { return boundary >= 0; }
};

// Graph view shared by the path engine and the matcher. Dots are addressed
// by (type, stab, round); rounds are restricted to a sliding window so that
// search scratch arrays stay bounded on endless streams.
class LatticeGraph {
 public:
  virtual ~LatticeGraph() = default;

  virtual const CodeConfig& config() const = 0;
  virtual int num_stabs(StabType t) const = 0;
  virtual Site stab_site(StabType t, int index) const = 0;

  virtual int round_lo() const = 0;
  virtual int round_hi() const = 0;

  // Dense scratch index of a dot within the current window.
  virtual int slot_of(const DotKey& d) const = 0;
  virtual int slot_count() const = 0;
  virtual bool has_dot(const DotKey& d) const = 0;

  virtual void for_neighbors(
      const DotKey& d, const std::function<void(const LineRef&)>& fn) const = 0;

  // Data qubits (dense data indices) flipped by one traversal of the line;
  // empty when unknown (explicit lattices loaded from text).
  virtual std::span<const uint16_t> line_projection(int line_id) const = 0;

  // Deterministic ordering key used for tie-breaking.
  std::tuple<int, int, int, int> order_key(const DotKey& d) const {
    Site s = stab_site(d.type, d.stab);
    return {d.round, s.row, s.col, static_cast<int>(d.type)};
  }
};

// One single-fault error process contributing to a line (diagnostics).
struct LineProcess {
  int op_index;   // gate within the round schedule
  Fault fault;
  int phase;      // earliest-event round minus fault round
};

// A space-time equivalence class of lines, anchored at the round of its
// earliest endpoint. p_by_phase[k] holds the total probability of the
// contributing faults occurring k rounds before the anchor.
struct LineTemplate {
  StabType type;
  int stab_a = -1;
  int stab_b = -1;      // -1 for boundary lines
  int dround_b = 0;     // round(b) - round(a), 0 or 1
  int boundary = -1;
  double p_by_phase[2] = {0.0, 0.0};
  std::vector<uint16_t> projection;  // data indices flipped (representative)
  double projection_prob = -1.0;     // probability of the representative
  int logical_parity = -1;           // parity on the tracked logical support
  std::vector<LineProcess> processes;
  double total_p() const { return p_by_phase[0] + p_by_phase[1]; }
};

// Time-periodic lattice built by pre-analyzing all single error processes of
// one round of the schedule. Materializes any round window on demand.
class PeriodicLattice final : public LatticeGraph {
 public:
  // Rejects models with no error process (all weights undefined).
  PeriodicLattice(const GateSchedule& schedule, const DepolarizingModel& model);

  const CodeConfig& config() const override { return schedule_->config(); }
  int num_stabs(StabType t) const override {
    return config().num_stabilizers(t);
  }
  Site stab_site(StabType t, int index) const override {
    return config().stabilizers(t)[index].site;
  }

  int round_lo() const override { return lo_; }
  int round_hi() const override { return hi_; }
  int slot_of(const DotKey& d) const override;
  int slot_count() const override;
  bool has_dot(const DotKey& d) const override;
  void for_neighbors(
      const DotKey& d,
      const std::function<void(const LineRef&)>& fn) const override;
  std::span<const uint16_t> line_projection(int line_id) const override;

  // Window control. Capacity is allocated once; [lo, hi] must fit in it.
  void set_window(int lo, int hi, int capacity_hint = 0);
  // Rounds after `last_faulty` carry no new error processes (the perfect
  // capping round). INT_MAX while streaming.
  void set_fault_horizon(int last_faulty) { fault_horizon_ = last_faulty; }
  int fault_horizon() const { return fault_horizon_; }

  const std::vector<LineTemplate>& templates() const { return templates_; }
  double line_p_at_anchor(const LineTemplate& t, int anchor) const;

  const GateSchedule& schedule() const { return *schedule_; }
  const DepolarizingModel& model() const { return model_; }

 private:
  struct AdjEntry {
    int template_id;
    uint8_t end;  // 0 = stab_a side, 1 = stab_b side
  };
  void enumerate();
  void add_process(StabType type, const std::vector<DetectionEvent>& events,
                   const std::vector<uint16_t>& projection, int fault_round,
                   int op_index, const Fault& fault, double prob);

  const GateSchedule* schedule_;
  DepolarizingModel model_;
  std::vector<LineTemplate> templates_;
  std::vector<std::vector<AdjEntry>> adjacency_[2];  // per type, per stab
  int lo_ = 1;
  int hi_ = 0;
  int capacity_ = 0;
  int fault_horizon_ = std::numeric_limits<int>::max();
};

// Hand-buildable lattice with explicit dots and lines (tests, text files).
class ExplicitLattice final : public LatticeGraph {
 public:
  explicit ExplicitLattice(const CodeConfig& config) : config_(&config) {}

  int add_dot(const DotKey& d);
  int add_line(const DotKey& a, const DotKey& b, double p, double w);
  int add_boundary_line(const DotKey& a, int boundary, double p, double w);
  void set_line_p(int line_id, double p);  // also recomputes the weight

  const CodeConfig& config() const override { return *config_; }
  int num_stabs(StabType t) const override {
    return config_->num_stabilizers(t);
  }
  Site stab_site(StabType t, int index) const override {
    return config_->stabilizers(t)[index].site;
  }
  int round_lo() const override { return lo_; }
  int round_hi() const override { return hi_; }
  int slot_of(const DotKey& d) const override;
  int slot_count() const override { return static_cast<int>(dots_.size()); }
  bool has_dot(const DotKey& d) const override;
  void for_neighbors(
      const DotKey& d,
      const std::function<void(const LineRef&)>& fn) const override;
  std::span<const uint16_t> line_projection(int) const override { return {}; }

  struct Line {
    DotKey a, b;
    int boundary = -1;
    double p = 0.0, w = 0.0;
  };
  const std::vector<DotKey>& dots() const { return dots_; }
  const std::vector<Line>& lines() const { return lines_; }

 private:
  const CodeConfig* config_;
  std::vector<DotKey> dots_;
  std::vector<Line> lines_;
  std::vector<std::vector<int>> incident_;
  std::vector<std::pair<DotKey, int>> index_;  // sorted after any insert
  mutable bool index_dirty_ = false;
  int lo_ = 1, hi_ = 0;
  int find_dot(const DotKey& d) const;
};

}  // namespace sqec
