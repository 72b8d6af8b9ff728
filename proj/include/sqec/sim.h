#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sqec/noise.h"
#include "sqec/schedule.h"

namespace sqec {

// Space-time point where a syndrome value changed between consecutive
// rounds. Rounds are 1-based; the first round is compared against the
// deterministic noiseless reference.
struct DetectionEvent {
  StabType type;
  int stab_index;
  int round;
  bool operator==(const DetectionEvent&) const = default;
  auto operator<=>(const DetectionEvent&) const = default;
};

// Scripted fault for tests and single-error enumeration: applied right
// after the ideal action of op `op_index` of round `round`.
struct InjectedFault {
  int round;
  int op_index;
  Fault fault;
};

// Pauli frame over all qubits: per-qubit (x,z) error bits propagated through
// the Clifford schedule. Propagation is linear over GF(2).
struct PauliFrame {
  std::vector<uint8_t> x;
  std::vector<uint8_t> z;

  explicit PauliFrame(int n = 0) : x(n), z(n) {}
  void clear_qubit(int q) { x[q] = z[q] = 0; }
  void apply(int q, Pauli p) {
    x[q] ^= p.x;
    z[q] ^= p.z;
  }
  void hadamard(int q) { std::swap(x[q], z[q]); }
  void cnot(int control, int target) {
    x[target] ^= x[control];
    z[control] ^= z[target];
  }
  bool operator==(const PauliFrame&) const = default;
};

// Monte Carlo simulator of repeated stabilizer measurement rounds under the
// depolarizing model. Tracks only deviations from the noiseless run, so all
// reference outcomes are zero; with the no-initialization scheme the first
// round's syndrome establishes that reference.
class Simulator {
 public:
  Simulator(const GateSchedule& schedule, DepolarizingModel model,
            uint64_t seed, uint64_t stream = 0);

  const CodeConfig& config() const { return schedule_->config(); }
  const GateSchedule& schedule() const { return *schedule_; }
  const DepolarizingModel& model() const { return model_; }

  int rounds_completed() const {
    return first_round_kept_ - 1 + static_cast<int>(history_.size());
  }

  // Schedules a fault for a future round. Faults for already-simulated
  // rounds are rejected.
  void inject(const InjectedFault& f);
  // Convenience: Pauli on one qubit at the start of a round (before init).
  void inject_pauli(int round, int qubit, Pauli p);

  // Executes one full cycle; returns outcome deviations per stabilizer,
  // Z block first then X block (outcomes().size() == total stabilizers).
  const std::vector<uint8_t>& run_round();
  // Same cycle with all noise disabled (injections still honored).
  const std::vector<uint8_t>& run_perfect_round();

  const std::vector<uint8_t>& outcomes(int round) const {
    if (round <= first_round_kept_ - 1 || round > rounds_completed())
      throw std::out_of_range("outcomes for round not retained");
    return history_.at(round - first_round_kept_);
  }
  // Drops stored outcomes older than the last `keep` rounds. Events and
  // snapshots only cover retained rounds afterwards.
  void trim_history(int keep);
  const PauliFrame& frame() const { return frame_; }
  PauliFrame& frame() { return frame_; }

  // Events of the given round (difference with the previous round).
  std::vector<DetectionEvent> events_of_round(int round) const;

  struct PreRoundPauli {
    int round;
    int qubit;
    Pauli pauli;
  };

  struct Snapshot {
    uint64_t owner = 0;
    PauliFrame frame{0};
    int first_round_kept = 1;
    std::vector<std::vector<uint8_t>> history;
    std::vector<InjectedFault> pending;
    std::vector<PreRoundPauli> pre_round;
    Rng rng;
  };
  Snapshot snapshot() const;
  void restore(const Snapshot& snap);

  int outcome_index(StabType t, int stab_index) const {
    return t == StabType::Z ? stab_index
                            : config().num_stabilizers(StabType::Z) +
                                  stab_index;
  }

 private:
  void run_one_round(bool noisy);
  void apply_fault(const GateOp& op, const Fault& f);

  const GateSchedule* schedule_;
  DepolarizingModel model_;
  Rng rng_;
  uint64_t instance_id_;
  PauliFrame frame_;
  int first_round_kept_ = 1;
  std::vector<std::vector<uint8_t>> history_;
  std::vector<InjectedFault> pending_;
  std::vector<PreRoundPauli> pre_round_;
  std::vector<uint8_t> scratch_;
};

// Events between two outcome vectors of consecutive rounds; `round` tags the
// later one. Vectors must come from configs of identical shape.
std::vector<DetectionEvent> detection_events(
    const CodeConfig& config, const std::vector<uint8_t>& previous,
    const std::vector<uint8_t>& current, int round);

}  // namespace sqec
