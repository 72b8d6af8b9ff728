#pragma once

#include <vector>

#include "sqec/geometry.h"

namespace sqec {

enum class GateKind : uint8_t {
  Init,     // ancilla reset into its preparation basis
  Hadamard,
  Cnot,
  Measure,  // ancilla readout in its measurement basis
  Idle,
};

// One gate within a round. For Cnot, q0 = control, q1 = target. For
// Init/Measure on ancillas, `basis_x` selects |+>/X-basis handling (used by
// the hadamard-free cycle variant); `stab` identifies the measured
// stabilizer.
struct GateOp {
  GateKind kind;
  int step;
  int q0;
  int q1 = -1;
  bool basis_x = false;
  StabType stab_type = StabType::Z;
  int stab_index = -1;
};

struct ScheduleOptions {
  // Default cycle: init |0>, H on X-ancillas, 4 CNOT steps, H on X-ancillas,
  // measure all in Z (8 steps). With hadamard_free, X-ancillas are prepared
  // and measured directly in the X basis (6 steps).
  bool hadamard_free = false;
};

// The cyclic gate sequence measuring every stabilizer once per round.
class GateSchedule {
 public:
  GateSchedule(const CodeConfig& config, ScheduleOptions opts = {});

  const std::vector<GateOp>& ops() const { return ops_; }
  int num_steps() const { return num_steps_; }
  const CodeConfig& config() const { return *config_; }
  const ScheduleOptions& options() const { return opts_; }

  // Ops touching a given qubit, in time order (indices into ops()).
  const std::vector<int>& ops_of_qubit(int q) const { return qubit_ops_[q]; }

 private:
  const CodeConfig* config_;
  ScheduleOptions opts_;
  int num_steps_ = 0;
  std::vector<GateOp> ops_;
  std::vector<std::vector<int>> qubit_ops_;
};

inline GateSchedule build_schedule(const CodeConfig& config,
                                   ScheduleOptions opts = {}) {
  return GateSchedule(config, opts);
}

}  // namespace sqec
