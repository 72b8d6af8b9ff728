#include "sqec/noise.h"

namespace sqec {

std::vector<Fault> DepolarizingModel::channel(GateKind k) const {
  std::vector<Fault> out;
  const double q = gate_prob(k);
  if (q == 0.0) return out;
  auto pauli = [](int code) {  // 1=X, 2=Z, 3=Y
    Pauli p;
    p.x = code & 1;
    p.z = code & 2;
    return p;
  };
  switch (k) {
    case GateKind::Init:
    case GateKind::Measure: {
      Fault f;
      f.flip = true;
      f.prob = q;
      out.push_back(f);
      break;
    }
    case GateKind::Hadamard:
    case GateKind::Idle:
      for (int c = 1; c <= 3; ++c) {
        Fault f;
        f.p0 = pauli(c);
        f.prob = q / 3.0;
        out.push_back(f);
      }
      break;
    case GateKind::Cnot:
      for (int c0 = 0; c0 <= 3; ++c0)
        for (int c1 = 0; c1 <= 3; ++c1) {
          if (c0 == 0 && c1 == 0) continue;
          Fault f;
          f.p0 = pauli(c0);
          f.p1 = pauli(c1);
          f.prob = q / 15.0;
          out.push_back(f);
        }
      break;
  }
  return out;
}

namespace {
uint64_t splitmix64(uint64_t& s) {
  uint64_t z = (s += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
}  // namespace

Rng make_rng(uint64_t seed, uint64_t stream) {
  uint64_t s = seed ^ (0xa0761d6478bd642full * (stream + 1));
  std::seed_seq seq{splitmix64(s), splitmix64(s), splitmix64(s),
                    splitmix64(s)};
  return Rng(seq);
}

Fault sample_fault(const DepolarizingModel& model, GateKind kind, Rng& rng) {
  Fault none;
  const double q = model.gate_prob(kind);
  if (q == 0.0) return none;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  if (u01(rng) >= q) return none;
  auto pauli = [](int code) {
    Pauli p;
    p.x = code & 1;
    p.z = code & 2;
    return p;
  };
  Fault f;
  f.prob = q;
  switch (kind) {
    case GateKind::Init:
    case GateKind::Measure:
      f.flip = true;
      break;
    case GateKind::Hadamard:
    case GateKind::Idle:
      f.p0 = pauli(1 + static_cast<int>(u01(rng) * 3.0) % 3);
      break;
    case GateKind::Cnot: {
      int c = 1 + static_cast<int>(u01(rng) * 15.0) % 15;
      f.p0 = pauli(c & 3);
      f.p1 = pauli(c >> 2);
      break;
    }
  }
  return f;
}

}  // namespace sqec
