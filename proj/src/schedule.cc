#include "sqec/schedule.h"

#include <algorithm>
#include <cassert>

namespace sqec {

GateSchedule::GateSchedule(const CodeConfig& config, ScheduleOptions opts)
    : config_(&config), opts_(opts) {
  const int cnot_steps = 4;
  num_steps_ = opts.hadamard_free ? cnot_steps + 2 : cnot_steps + 4;

  std::vector<char> busy(config.num_qubits());
  auto begin_step = [&] { std::fill(busy.begin(), busy.end(), 0); };
  auto push = [&](GateOp op) {
    assert(!busy[op.q0]);
    busy[op.q0] = 1;
    if (op.q1 >= 0) {
      assert(!busy[op.q1]);
      busy[op.q1] = 1;
    }
    ops_.push_back(op);
  };
  // Every qubit not engaged in a gate idles (and suffers memory noise).
  auto fill_idles = [&](int step) {
    for (int q = 0; q < config.num_qubits(); ++q)
      if (!busy[q]) ops_.push_back({GateKind::Idle, step, q});
  };

  auto for_each_stab = [&](auto&& fn) {
    for (StabType t : {StabType::Z, StabType::X})
      for (const Stabilizer& s : config.stabilizers(t)) fn(s);
  };

  int step = 0;
  begin_step();
  for_each_stab([&](const Stabilizer& s) {
    bool x_basis = opts.hadamard_free && s.type == StabType::X;
    push({GateKind::Init, step, s.qubit, -1, x_basis, s.type, s.index});
  });
  fill_idles(step);
  ++step;

  if (!opts.hadamard_free) {
    begin_step();
    for (const Stabilizer& s : config.stabilizers(StabType::X))
      push({GateKind::Hadamard, step, s.qubit});
    fill_idles(step);
    ++step;
  }

  for (int k = 0; k < cnot_steps; ++k, ++step) {
    begin_step();
    for_each_stab([&](const Stabilizer& s) {
      int data = s.data_neighbors[k];
      if (data < 0) return;
      // Z-stabilizers: data controls, ancilla targets (collects X errors).
      // X-stabilizers: ancilla controls, data targets.
      if (s.type == StabType::Z)
        push({GateKind::Cnot, step, data, s.qubit});
      else
        push({GateKind::Cnot, step, s.qubit, data});
    });
    fill_idles(step);
  }

  if (!opts.hadamard_free) {
    begin_step();
    for (const Stabilizer& s : config.stabilizers(StabType::X))
      push({GateKind::Hadamard, step, s.qubit});
    fill_idles(step);
    ++step;
  }

  begin_step();
  for_each_stab([&](const Stabilizer& s) {
    bool x_basis = opts.hadamard_free && s.type == StabType::X;
    push({GateKind::Measure, step, s.qubit, -1, x_basis, s.type, s.index});
  });
  fill_idles(step);
  ++step;
  assert(step == num_steps_);

  qubit_ops_.resize(config.num_qubits());
  for (size_t i = 0; i < ops_.size(); ++i) {
    qubit_ops_[ops_[i].q0].push_back(static_cast<int>(i));
    if (ops_[i].q1 >= 0) qubit_ops_[ops_[i].q1].push_back(static_cast<int>(i));
  }
}

}  // namespace sqec
