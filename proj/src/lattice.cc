#include "sqec/lattice.h"

#include <algorithm>
#include <cassert>
#include <map>
#include <set>
#include <stdexcept>

namespace sqec {

double line_weight(double p_line) {
  if (!(p_line > 0.0) || p_line > 1.0)
    throw std::invalid_argument("line probability must be in (0, 1]");
  return -std::log(p_line);
}

namespace {

// Sparse single-fault propagation: tracks only the deviation frame, visiting
// just the ops that touch affected qubits. Rounds are re-used cyclically, so
// a fault injected at `fault_round` settles within a few rounds.
struct SparsePropagation {
  std::vector<DetectionEvent> events;       // per-type events, all rounds
  std::vector<uint16_t> x_projection;       // data indices with residual X
  std::vector<uint16_t> z_projection;       // data indices with residual Z
};

SparsePropagation propagate_fault(const GateSchedule& sched, int op_index,
                                  const Fault& fault, int fault_round,
                                  int settle_rounds = 5) {
  const CodeConfig& cfg = sched.config();
  const auto& ops = sched.ops();

  std::map<int, std::pair<uint8_t, uint8_t>> dev;  // qubit -> (x, z)
  auto touch = [&](int q) -> std::pair<uint8_t, uint8_t>& { return dev[q]; };
  auto apply_pauli = [&](int q, Pauli p) {
    if (p.identity()) return;
    auto& b = touch(q);
    b.first ^= p.x;
    b.second ^= p.z;
  };

  // flips[(type, stab)] per round, sparse.
  std::map<std::pair<StabType, int>, std::vector<uint8_t>> flip_history;
  const int total_rounds = fault_round + settle_rounds;

  auto record_flip = [&](StabType t, int stab, int round) {
    auto& h = flip_history[{t, stab}];
    if (h.empty()) h.assign(total_rounds + 1, 0);
    h[round] ^= 1;
  };

  // Applies the deviation action of one op; returns false if the op leaves
  // the deviation set untouched.
  auto process_op = [&](int i, int round) {
    const GateOp& op = ops[i];
    switch (op.kind) {
      case GateKind::Init: {
        auto it = dev.find(op.q0);
        if (it != dev.end()) dev.erase(it);
        break;
      }
      case GateKind::Hadamard: {
        auto it = dev.find(op.q0);
        if (it != dev.end()) std::swap(it->second.first, it->second.second);
        break;
      }
      case GateKind::Cnot: {
        auto ic = dev.find(op.q0);
        auto it = dev.find(op.q1);
        uint8_t cx = ic != dev.end() ? ic->second.first : 0;
        uint8_t tz = it != dev.end() ? it->second.second : 0;
        if (cx) touch(op.q1).first ^= 1;
        if (tz) touch(op.q0).second ^= 1;
        break;
      }
      case GateKind::Measure: {
        auto it = dev.find(op.q0);
        if (it != dev.end()) {
          uint8_t flipped =
              op.basis_x ? it->second.second : it->second.first;
          if (flipped) record_flip(op.stab_type, op.stab_index, round);
          dev.erase(it);
        }
        break;
      }
      case GateKind::Idle:
        break;
    }
  };

  auto apply_fault_action = [&](const GateOp& op, const Fault& f, int round) {
    if (f.flip) {
      if (op.kind == GateKind::Init) {
        if (op.basis_x)
          touch(op.q0).second ^= 1;
        else
          touch(op.q0).first ^= 1;
      } else if (op.kind == GateKind::Measure) {
        record_flip(op.stab_type, op.stab_index, round);
      }
    }
    apply_pauli(op.q0, f.p0);
    if (op.q1 >= 0) apply_pauli(op.q1, f.p1);
  };

  // Round fault_round: everything before op_index is clean; apply the fault,
  // then walk the remaining ops touching the deviation set in index order.
  auto run_tail = [&](int round, int start_index) {
    std::set<int> pending;
    auto enqueue_qubit = [&](int q, int after) {
      for (int idx : sched.ops_of_qubit(q))
        if (idx > after) pending.insert(idx);
    };
    for (const auto& [q, bits] : dev) enqueue_qubit(q, start_index);
    while (!pending.empty()) {
      int i = *pending.begin();
      pending.erase(pending.begin());
      size_t before = dev.size();
      std::vector<int> prior;
      prior.reserve(2);
      for (int q : {ops[i].q0, ops[i].q1})
        if (q >= 0 && dev.count(q)) prior.push_back(q);
      process_op(i, round);
      if (dev.size() != before) {
        // New qubits may have joined; enqueue their later ops.
        for (int q : {ops[i].q0, ops[i].q1})
          if (q >= 0 && dev.count(q)) {
            bool was_prior =
                std::find(prior.begin(), prior.end(), q) != prior.end();
            if (!was_prior) enqueue_qubit(q, i);
          }
      }
    }
  };

  apply_fault_action(ops[op_index], fault, fault_round);
  run_tail(fault_round, op_index);
  for (int r = fault_round + 1; r <= total_rounds; ++r) run_tail(r, -1);

  SparsePropagation out;
  for (auto& [key, hist] : flip_history) {
    uint8_t prev = 0;
    for (int r = 1; r <= total_rounds; ++r) {
      uint8_t cur = hist[r];
      if (cur != prev) out.events.push_back({key.first, key.second, r});
      prev = cur;
    }
    // Settled: the flip pattern must be constant over the final rounds.
    if (total_rounds >= 2 && hist[total_rounds] != hist[total_rounds - 1])
      throw std::logic_error("single fault failed to settle");
  }
  for (auto& [q, bits] : dev) {
    if (!cfg.is_data_qubit(q)) continue;
    if (bits.first) out.x_projection.push_back(
        static_cast<uint16_t>(cfg.data_index(q)));
    if (bits.second) out.z_projection.push_back(
        static_cast<uint16_t>(cfg.data_index(q)));
  }
  std::sort(out.x_projection.begin(), out.x_projection.end());
  std::sort(out.z_projection.begin(), out.z_projection.end());
  return out;
}

}  // namespace

PeriodicLattice::PeriodicLattice(const GateSchedule& schedule,
                                 const DepolarizingModel& model)
    : schedule_(&schedule), model_(model) {
  if (model.max_prob() <= 0.0)
    throw std::invalid_argument(
        "error lattice undefined for a noiseless model");
  adjacency_[0].resize(config().num_stabilizers(StabType::Z));
  adjacency_[1].resize(config().num_stabilizers(StabType::X));
  enumerate();
  set_window(1, 1);
}

void PeriodicLattice::enumerate() {
  const int fault_round = 3;  // bulk round; reference rounds precede it
  const auto& ops = schedule_->ops();
  const CodeConfig& cfg = config();

  for (int i = 0; i < static_cast<int>(ops.size()); ++i) {
    for (const Fault& f : model_.channel(ops[i].kind)) {
      if (f.prob <= 0.0) continue;
      SparsePropagation prop = propagate_fault(*schedule_, i, f, fault_round);
      for (StabType t : {StabType::Z, StabType::X}) {
        std::vector<DetectionEvent> ev;
        for (const auto& e : prop.events)
          if (e.type == t) ev.push_back(e);
        if (ev.empty()) continue;
        const auto& proj =
            t == StabType::Z ? prop.x_projection : prop.z_projection;
        add_process(t, ev, proj, fault_round, i, f, f.prob);
      }
      // Zero-event faults must act trivially on the tracked logicals.
      for (StabType t : {StabType::Z, StabType::X}) {
        bool any = false;
        for (const auto& e : prop.events) any |= (e.type == t);
        if (any) continue;
        const auto& proj =
            t == StabType::Z ? prop.x_projection : prop.z_projection;
        const auto& support = t == StabType::Z ? cfg.logical_z_support()
                                               : cfg.logical_x_support();
        int parity = 0;
        for (uint16_t di : proj) {
          int q = cfg.data_qubits()[di];
          parity ^= std::count(support.begin(), support.end(), q) & 1;
        }
        if (parity)
          throw std::logic_error(
              "undetectable single fault with logical action");
      }
    }
  }
}

void PeriodicLattice::add_process(StabType type,
                                  const std::vector<DetectionEvent>& events,
                                  const std::vector<uint16_t>& projection,
                                  int fault_round, int op_index,
                                  const Fault& fault, double prob) {
  const CodeConfig& cfg = config();
  if (events.size() > 2)
    throw std::logic_error("single fault produced more than two events");

  LineTemplate key;
  key.type = type;
  if (events.size() == 2) {
    DetectionEvent a = events[0], b = events[1];
    if (std::tie(a.round, a.stab_index) > std::tie(b.round, b.stab_index))
      std::swap(a, b);
    key.stab_a = a.stab_index;
    key.stab_b = b.stab_index;
    key.dround_b = b.round - a.round;
    if (key.dround_b < 0 || key.dround_b > 1)
      throw std::logic_error("line spans more than one round");
    key.boundary = -1;
  } else {
    // Single event: the chain ends on exactly one spatial boundary,
    // identified from the parity of boundary-adjacent qubits in the action.
    key.stab_a = events[0].stab_index;
    key.stab_b = -1;
    key.dround_b = 0;
    int parity[2] = {0, 0};
    const int base = type == StabType::Z ? kBoundaryZNorth : kBoundaryXWest;
    for (uint16_t di : projection) {
      int q = cfg.data_qubits()[di];
      int b = cfg.data_boundary(q, type);
      if (b >= 0) parity[b - base] ^= 1;
    }
    if (parity[0] + parity[1] != 1)
      throw std::logic_error("boundary of single-event fault is ambiguous");
    key.boundary = base + (parity[1] ? 1 : 0);
  }

  int anchor = events[0].round;
  if (events.size() == 2) anchor = std::min(anchor, events[1].round);
  const int phase = anchor - fault_round;
  if (phase < 0 || phase > 1)
    throw std::logic_error("unexpected fault-to-event phase");

  const auto& support = type == StabType::Z ? cfg.logical_z_support()
                                            : cfg.logical_x_support();
  int parity = 0;
  for (uint16_t di : projection) {
    int q = cfg.data_qubits()[di];
    parity ^= std::count(support.begin(), support.end(), q) & 1;
  }

  // Find or create the template.
  int tid = -1;
  auto& adj = adjacency_[static_cast<int>(type)][key.stab_a];
  for (const AdjEntry& e : adj) {
    const LineTemplate& t = templates_[e.template_id];
    if (e.end == 0 && t.stab_b == key.stab_b && t.dround_b == key.dround_b &&
        t.boundary == key.boundary) {
      tid = e.template_id;
      break;
    }
  }
  if (tid < 0) {
    tid = static_cast<int>(templates_.size());
    templates_.push_back(key);
    adjacency_[static_cast<int>(type)][key.stab_a].push_back({tid, 0});
    if (key.stab_b >= 0)
      adjacency_[static_cast<int>(type)][key.stab_b].push_back({tid, 1});
  }
  LineTemplate& t = templates_[tid];
  if (t.logical_parity < 0) t.logical_parity = parity;
  if (t.logical_parity != parity)
    throw std::logic_error(
        "faults with identical detection footprint disagree on logical "
        "action");
  t.p_by_phase[phase] += prob;
  if (prob > t.projection_prob) {
    t.projection_prob = prob;
    t.projection = projection;
  }
  t.processes.push_back({op_index, fault, phase});
}

double PeriodicLattice::line_p_at_anchor(const LineTemplate& t,
                                         int anchor) const {
  double p = 0.0;
  if (anchor >= 1 && anchor <= fault_horizon_) p += t.p_by_phase[0];
  if (anchor >= 2 && anchor - 1 <= fault_horizon_) p += t.p_by_phase[1];
  return p;
}

void PeriodicLattice::set_window(int lo, int hi, int capacity_hint) {
  if (lo < 1 || hi < lo - 1)
    throw std::invalid_argument("invalid lattice window");
  int need = hi - lo + 1;
  int cap = std::max({need, capacity_hint, capacity_});
  if (cap > capacity_) capacity_ = cap;
  lo_ = lo;
  hi_ = hi;
}

int PeriodicLattice::slot_of(const DotKey& d) const {
  assert(d.round >= lo_ && d.round <= hi_);
  int stab_offset = d.type == StabType::X ? num_stabs(StabType::Z) : 0;
  return (stab_offset + d.stab) * capacity_ + (d.round % capacity_);
}

int PeriodicLattice::slot_count() const {
  return (num_stabs(StabType::Z) + num_stabs(StabType::X)) * capacity_;
}

bool PeriodicLattice::has_dot(const DotKey& d) const {
  return d.stab >= 0 && d.stab < num_stabs(d.type) && d.round >= lo_ &&
         d.round <= hi_;
}

void PeriodicLattice::for_neighbors(
    const DotKey& d, const std::function<void(const LineRef&)>& fn) const {
  const auto& adj = adjacency_[static_cast<int>(d.type)][d.stab];
  for (const AdjEntry& e : adj) {
    const LineTemplate& t = templates_[e.template_id];
    LineRef ref;
    ref.line_id = e.template_id;
    if (t.stab_b < 0) {
      ref.a = d;
      ref.boundary = t.boundary;
      ref.anchor = d.round;
      double p = line_p_at_anchor(t, ref.anchor);
      if (p <= 0.0) continue;
      ref.p = p;
      ref.w = line_weight(p);
      fn(ref);
      continue;
    }
    // Dot-dot line; both ends may coincide on the same stabilizer for
    // vertical (measurement-class) lines.
    auto emit = [&](int anchor, const DotKey& from, const DotKey& to) {
      if (to.round < lo_ || to.round > hi_) return;
      LineRef r;
      r.line_id = e.template_id;
      r.a = from;
      r.b = to;
      r.anchor = anchor;
      double p = line_p_at_anchor(t, anchor);
      if (p <= 0.0) return;
      r.p = p;
      r.w = line_weight(p);
      fn(r);
    };
    if (e.end == 0)
      emit(d.round, d, {t.type, t.stab_b, d.round + t.dround_b});
    else
      emit(d.round - t.dround_b, d, {t.type, t.stab_a, d.round - t.dround_b});
  }
}

std::span<const uint16_t> PeriodicLattice::line_projection(
    int line_id) const {
  return templates_[line_id].projection;
}

// ---------------------------------------------------------------------------

int ExplicitLattice::add_dot(const DotKey& d) {
  dots_.push_back(d);
  incident_.emplace_back();
  index_.push_back({d, static_cast<int>(dots_.size()) - 1});
  index_dirty_ = true;
  if (hi_ < lo_) {
    lo_ = hi_ = d.round;
  } else {
    lo_ = std::min(lo_, d.round);
    hi_ = std::max(hi_, d.round);
  }
  return static_cast<int>(dots_.size()) - 1;
}

int ExplicitLattice::find_dot(const DotKey& d) const {
  if (index_dirty_) {
    auto& idx = const_cast<ExplicitLattice*>(this)->index_;
    std::sort(idx.begin(), idx.end());
    const_cast<ExplicitLattice*>(this)->index_dirty_ = false;
  }
  auto it = std::lower_bound(index_.begin(), index_.end(),
                             std::make_pair(d, -1));
  if (it == index_.end() || !(it->first == d)) return -1;
  return it->second;
}

int ExplicitLattice::add_line(const DotKey& a, const DotKey& b, double p,
                              double w) {
  int ia = find_dot(a), ib = find_dot(b);
  if (ia < 0 || ib < 0) throw std::invalid_argument("line endpoint missing");
  lines_.push_back({a, b, -1, p, w});
  int id = static_cast<int>(lines_.size()) - 1;
  incident_[ia].push_back(id);
  incident_[ib].push_back(id);
  return id;
}

int ExplicitLattice::add_boundary_line(const DotKey& a, int boundary, double p,
                                       double w) {
  int ia = find_dot(a);
  if (ia < 0) throw std::invalid_argument("line endpoint missing");
  lines_.push_back({a, a, boundary, p, w});
  int id = static_cast<int>(lines_.size()) - 1;
  incident_[ia].push_back(id);
  return id;
}

void ExplicitLattice::set_line_p(int line_id, double p) {
  lines_.at(line_id).p = p;
  lines_.at(line_id).w = line_weight(p);
}

int ExplicitLattice::slot_of(const DotKey& d) const {
  int i = find_dot(d);
  assert(i >= 0);
  return i;
}

bool ExplicitLattice::has_dot(const DotKey& d) const {
  return find_dot(d) >= 0;
}

void ExplicitLattice::for_neighbors(
    const DotKey& d, const std::function<void(const LineRef&)>& fn) const {
  int i = find_dot(d);
  if (i < 0) return;
  for (int id : incident_[i]) {
    const Line& l = lines_[id];
    LineRef ref;
    ref.line_id = id;
    ref.p = l.p;
    ref.w = l.w;
    if (l.boundary >= 0) {
      ref.a = d;
      ref.boundary = l.boundary;
      ref.anchor = d.round;
    } else {
      ref.a = d;
      ref.b = l.a == d ? l.b : l.a;
      ref.anchor = std::min(l.a.round, l.b.round);
    }
    fn(ref);
  }
}

}  // namespace sqec
