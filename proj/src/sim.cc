#include "sqec/sim.h"

#include <algorithm>
#include <atomic>
#include <stdexcept>

namespace sqec {

namespace {
std::atomic<uint64_t> next_instance_id{1};
}

Simulator::Simulator(const GateSchedule& schedule, DepolarizingModel model,
                     uint64_t seed, uint64_t stream)
    : schedule_(&schedule),
      model_(model),
      rng_(make_rng(seed, stream)),
      instance_id_(next_instance_id.fetch_add(1)),
      frame_(schedule.config().num_qubits()) {
  scratch_.resize(schedule.config().num_stabilizers(StabType::Z) +
                  schedule.config().num_stabilizers(StabType::X));
}

void Simulator::inject(const InjectedFault& f) {
  if (f.round <= rounds_completed())
    throw std::invalid_argument("cannot inject into an already-run round");
  pending_.push_back(f);
}

void Simulator::inject_pauli(int round, int qubit, Pauli p) {
  if (round <= rounds_completed())
    throw std::invalid_argument("cannot inject into an already-run round");
  pre_round_.push_back({round, qubit, p});
}

const std::vector<uint8_t>& Simulator::run_round() {
  run_one_round(!model_.noiseless());
  return history_.back();
}

const std::vector<uint8_t>& Simulator::run_perfect_round() {
  run_one_round(false);
  return history_.back();
}

void Simulator::run_one_round(bool noisy) {
  const int round = rounds_completed() + 1;
  const auto& ops = schedule_->ops();
  std::fill(scratch_.begin(), scratch_.end(), 0);

  for (const auto& pre : pre_round_) {
    if (pre.round == round) frame_.apply(pre.qubit, pre.pauli);
  }

  for (int i = 0; i < static_cast<int>(ops.size()); ++i) {
    const GateOp& op = ops[i];
    // Ideal action on the frame.
    switch (op.kind) {
      case GateKind::Init:
        frame_.clear_qubit(op.q0);
        break;
      case GateKind::Hadamard:
        frame_.hadamard(op.q0);
        break;
      case GateKind::Cnot:
        frame_.cnot(op.q0, op.q1);
        break;
      case GateKind::Measure: {
        int idx = outcome_index(op.stab_type, op.stab_index);
        // X errors flip a Z-basis readout, Z errors an X-basis readout.
        bool flipped = op.basis_x ? frame_.z[op.q0] : frame_.x[op.q0];
        scratch_[idx] ^= flipped;
        frame_.clear_qubit(op.q0);
        break;
      }
      case GateKind::Idle:
        break;
    }
    // Noise channel after the ideal gate.
    if (noisy) {
      Fault f = sample_fault(model_, op.kind, rng_);
      if (f.prob > 0.0) apply_fault(op, f);
    }
    for (const auto& inj : pending_) {
      if (inj.round == round && inj.op_index == i) apply_fault(op, inj.fault);
    }
  }
  history_.push_back(scratch_);
}

void Simulator::apply_fault(const GateOp& op, const Fault& f) {
  if (f.flip) {
    if (op.kind == GateKind::Init) {
      // Orthogonal preparation = Pauli flipping the prepared basis state.
      if (op.basis_x)
        frame_.z[op.q0] ^= 1;
      else
        frame_.x[op.q0] ^= 1;
    } else if (op.kind == GateKind::Measure) {
      int idx = outcome_index(op.stab_type, op.stab_index);
      scratch_[idx] ^= 1;
    }
  }
  if (!f.p0.identity()) frame_.apply(op.q0, f.p0);
  if (op.q1 >= 0 && !f.p1.identity()) frame_.apply(op.q1, f.p1);
}

std::vector<DetectionEvent> Simulator::events_of_round(int round) const {
  static const std::vector<uint8_t> empty;
  const auto& prev = round >= 2 ? outcomes(round - 1) : empty;
  return detection_events(config(), prev, outcomes(round), round);
}

void Simulator::trim_history(int keep) {
  int drop = static_cast<int>(history_.size()) - keep;
  if (drop <= 0) return;
  history_.erase(history_.begin(), history_.begin() + drop);
  first_round_kept_ += drop;
  std::erase_if(pending_, [&](const InjectedFault& f) {
    return f.round < first_round_kept_;
  });
  std::erase_if(pre_round_, [&](const PreRoundPauli& f) {
    return f.round < first_round_kept_;
  });
}

Simulator::Snapshot Simulator::snapshot() const {
  Snapshot s;
  s.owner = instance_id_;
  s.frame = frame_;
  s.first_round_kept = first_round_kept_;
  s.history = history_;
  s.pending = pending_;
  s.pre_round = pre_round_;
  s.rng = rng_;
  return s;
}

void Simulator::restore(const Snapshot& snap) {
  if (snap.owner != instance_id_)
    throw std::invalid_argument("snapshot token from another simulator");
  frame_ = snap.frame;
  first_round_kept_ = snap.first_round_kept;
  history_ = snap.history;
  pending_ = snap.pending;
  pre_round_ = snap.pre_round;
  rng_ = snap.rng;
}

std::vector<DetectionEvent> detection_events(
    const CodeConfig& config, const std::vector<uint8_t>& previous,
    const std::vector<uint8_t>& current, int round) {
  const size_t expected =
      static_cast<size_t>(config.num_stabilizers(StabType::Z)) +
      config.num_stabilizers(StabType::X);
  if (current.size() != expected ||
      (!previous.empty() && previous.size() != expected))
    throw std::invalid_argument("outcome vectors do not match the config");
  std::vector<DetectionEvent> events;
  const int nz = config.num_stabilizers(StabType::Z);
  for (size_t i = 0; i < current.size(); ++i) {
    uint8_t prev = previous.empty() ? 0 : previous[i];
    if (prev != current[i]) {
      StabType t = static_cast<int>(i) < nz ? StabType::Z : StabType::X;
      int idx = static_cast<int>(i) - (t == StabType::X ? nz : 0);
      events.push_back({t, idx, round});
    }
  }
  return events;
}

}  // namespace sqec
