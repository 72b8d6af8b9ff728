#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "sqec/schedule.h"

namespace sqec {

// Single-qubit Pauli as (x,z) bit pair; Y = X*Z.
struct Pauli {
  bool x = false;
  bool z = false;
  bool identity() const { return !x && !z; }
};

// A fault attached to one gate: Pauli error(s) applied after the ideal gate,
// or a classical flip of an init/measurement outcome.
struct Fault {
  Pauli p0;            // on q0
  Pauli p1;            // on q1 (two-qubit gates)
  bool flip = false;   // init prepared orthogonal / measurement misreported
  double prob = 0.0;
};

// Standard depolarizing model: initialization prepares the orthogonal state
// w.p. p_init; measurement misreports w.p. p_meas; single-qubit gates and
// idles suffer X, Y or Z each w.p. p_1q/3; CNOT suffers each of the 15
// non-identity two-qubit Paulis w.p. p_cnot/15.
struct DepolarizingModel {
  double p = 0.0;
  double p_init = 0.0;
  double p_1q = 0.0;
  double p_cnot = 0.0;
  double p_meas = 0.0;

  static DepolarizingModel uniform(double p) {
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument("error probability out of [0,1]");
    DepolarizingModel m;
    m.p = m.p_init = m.p_1q = m.p_cnot = m.p_meas = p;
    return m;
  }
  static DepolarizingModel measurement_only(double p) {
    DepolarizingModel m = uniform(0.0);
    m.p = m.p_meas = p;
    return m;
  }
  bool noiseless() const {
    return p_init == 0.0 && p_1q == 0.0 && p_cnot == 0.0 && p_meas == 0.0;
  }
  double max_prob() const {
    return std::max(std::max(p_init, p_1q), std::max(p_cnot, p_meas));
  }

  double gate_prob(GateKind k) const {
    switch (k) {
      case GateKind::Init: return p_init;
      case GateKind::Hadamard:
      case GateKind::Idle: return p_1q;
      case GateKind::Cnot: return p_cnot;
      case GateKind::Measure: return p_meas;
    }
    return 0.0;
  }

  // All faults of a gate's channel with their probabilities.
  std::vector<Fault> channel(GateKind k) const;
};

using Rng = std::mt19937_64;

// Derives an independent generator for a named stream; experiments with
// distinct (seed, stream) never share randomness.
Rng make_rng(uint64_t seed, uint64_t stream = 0);

// Samples the gate's channel: identity with prob 1-p, otherwise a uniformly
// chosen fault. Returns fault with prob 0 when nothing fired.
Fault sample_fault(const DepolarizingModel& model, GateKind kind, Rng& rng);

}  // namespace sqec
