#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "sqec/sim.h"

using namespace sqec;

TEST_CASE("layout invariants") {
  for (int d = 2; d <= 8; ++d) {
    CodeConfig cfg(d);
    CHECK(cfg.num_data_qubits() == d * d + (d - 1) * (d - 1));
    CHECK(cfg.num_stabilizers(StabType::Z) == d * (d - 1));
    CHECK(cfg.num_stabilizers(StabType::X) == d * (d - 1));
    // Every data qubit participates in <= 2 stabilizers of each type; bulk
    // stabilizers have weight 4, boundary ones 3.
    std::map<int, int> z_count, x_count;
    for (StabType t : {StabType::Z, StabType::X}) {
      for (const auto& s : cfg.stabilizers(t)) {
        int w = s.weight();
        CHECK(w >= 3);
        CHECK(w <= 4);
        for (int q : s.data_neighbors)
          if (q >= 0) (t == StabType::Z ? z_count : x_count)[q]++;
      }
    }
    for (int q : cfg.data_qubits()) {
      CHECK(z_count[q] <= 2);
      CHECK(x_count[q] <= 2);
      CHECK(z_count[q] >= 1);
      CHECK(x_count[q] >= 1);
    }
    // Logical supports span the code: d qubits each.
    CHECK(static_cast<int>(cfg.logical_z_support().size()) == d);
    CHECK(static_cast<int>(cfg.logical_x_support().size()) == d);
  }
  CHECK_THROWS(CodeConfig(1));
}

TEST_CASE("schedule is collision-free and deterministic") {
  for (bool hfree : {false, true}) {
    CodeConfig cfg(4);
    GateSchedule sched(cfg, {hfree});
    // No qubit appears twice in one timestep.
    std::set<std::pair<int, int>> seen;
    std::map<std::pair<StabType, int>, int> measured;
    for (const auto& op : sched.ops()) {
      CHECK(seen.insert({op.step, op.q0}).second);
      if (op.q1 >= 0) CHECK(seen.insert({op.step, op.q1}).second);
      if (op.kind == GateKind::Measure) measured[{op.stab_type, op.stab_index}]++;
    }
    // One full cycle measures every stabilizer exactly once.
    CHECK(measured.size() ==
          static_cast<size_t>(cfg.num_stabilizers(StabType::Z) +
                              cfg.num_stabilizers(StabType::X)));
    for (auto& [k, v] : measured) CHECK(v == 1);

    // Replaying the build yields the identical gate list.
    GateSchedule again(cfg, {hfree});
    REQUIRE(again.ops().size() == sched.ops().size());
    for (size_t i = 0; i < sched.ops().size(); ++i) {
      CHECK(again.ops()[i].kind == sched.ops()[i].kind);
      CHECK(again.ops()[i].q0 == sched.ops()[i].q0);
      CHECK(again.ops()[i].q1 == sched.ops()[i].q1);
      CHECK(again.ops()[i].step == sched.ops()[i].step);
    }
  }
}

TEST_CASE("bulk syndrome qubits see exactly 4 CNOTs per cycle") {
  CodeConfig cfg(4);
  GateSchedule sched(cfg);
  std::map<int, int> cnots_per_qubit;
  for (const auto& op : sched.ops())
    if (op.kind == GateKind::Cnot) {
      cnots_per_qubit[op.q0]++;
      cnots_per_qubit[op.q1]++;
    }
  for (StabType t : {StabType::Z, StabType::X})
    for (const auto& s : cfg.stabilizers(t))
      CHECK(cnots_per_qubit[s.qubit] == s.weight());
}

TEST_CASE("noiseless fixed point: no events over 100 rounds, d in 2..16") {
  for (int d : {2, 3, 5, 8, 11, 16}) {
    CodeConfig cfg(d);
    GateSchedule sched(cfg);
    Simulator sim(sched, DepolarizingModel::uniform(0.0), 7);
    for (int r = 1; r <= 100; ++r) {
      sim.run_round();
      CHECK(sim.events_of_round(r).empty());
    }
  }
}

TEST_CASE("p=1 CNOT channel always injects a nonidentity two-qubit Pauli") {
  auto model = DepolarizingModel::uniform(1.0);
  Rng rng = make_rng(3);
  for (int i = 0; i < 500; ++i) {
    Fault f = sample_fault(model, GateKind::Cnot, rng);
    CHECK(f.prob > 0.0);
    CHECK((!f.p0.identity() || !f.p1.identity()));
  }
  // All 15 faults occur.
  std::set<int> codes;
  for (int i = 0; i < 2000; ++i) {
    Fault f = sample_fault(model, GateKind::Cnot, rng);
    codes.insert((f.p0.x | f.p0.z << 1) | (f.p1.x | f.p1.z << 1) << 2);
  }
  CHECK(codes.size() == 15);
}

TEST_CASE("single data X flips the two adjacent Z stabilizers permanently") {
  CodeConfig cfg(4);
  GateSchedule sched(cfg);
  Simulator sim(sched, DepolarizingModel::uniform(0.0), 1);
  // Bulk data qubit: pick an even-even site away from the north/south edges.
  int q = cfg.qubit_at({2, 2});
  REQUIRE(q >= 0);
  sim.run_round();
  sim.inject_pauli(2, q, {true, false});
  sim.run_round();
  auto ev = sim.events_of_round(2);
  REQUIRE(ev.size() == 2);
  for (const auto& e : ev) CHECK(e.type == StabType::Z);
  const auto& zstabs = cfg.stabilizers(StabType::Z);
  std::set<std::pair<int, int>> got;
  for (const auto& e : ev) {
    Site s = zstabs[e.stab_index].site;
    got.insert({s.row, s.col});
  }
  CHECK(got == std::set<std::pair<int, int>>{{1, 2}, {3, 2}});
  // Permanent: later rounds show the same outcomes, hence no new events.
  for (int r = 3; r <= 6; ++r) {
    sim.run_round();
    CHECK(sim.events_of_round(r).empty());
  }
}

TEST_CASE("measurement flip fires this round and reverts next round") {
  CodeConfig cfg(3);
  GateSchedule sched(cfg);
  Simulator sim(sched, DepolarizingModel::uniform(0.0), 1);
  // Find the measure op of Z stabilizer 0.
  int op_index = -1;
  for (size_t i = 0; i < sched.ops().size(); ++i) {
    const auto& op = sched.ops()[i];
    if (op.kind == GateKind::Measure && op.stab_type == StabType::Z &&
        op.stab_index == 0) {
      op_index = static_cast<int>(i);
      break;
    }
  }
  REQUIRE(op_index >= 0);
  Fault flip;
  flip.flip = true;
  flip.prob = 1.0;
  sim.inject({2, op_index, flip});
  sim.run_round();
  CHECK(sim.events_of_round(1).empty());
  sim.run_round();
  auto e2 = sim.events_of_round(2);
  REQUIRE(e2.size() == 1);
  CHECK(e2[0] == DetectionEvent{StabType::Z, 0, 2});
  sim.run_round();
  auto e3 = sim.events_of_round(3);
  REQUIRE(e3.size() == 1);
  CHECK(e3[0] == DetectionEvent{StabType::Z, 0, 3});
  sim.run_round();
  CHECK(sim.events_of_round(4).empty());
}

TEST_CASE("injected X before the CNOT layers flips the stabilizer this round") {
  // Hand-propagation oracle: an X landing on a data qubit at the start of a
  // round is copied onto both adjacent Z ancillas during that round's CNOTs,
  // so both fire at this round's measurement.
  CodeConfig cfg(4);
  GateSchedule sched(cfg);
  Simulator sim(sched, DepolarizingModel::uniform(0.0), 1);
  int q = cfg.qubit_at({2, 2});
  sim.inject_pauli(1, q, {true, false});
  sim.run_round();
  auto ev = sim.events_of_round(1);
  CHECK(ev.size() == 2);
  for (const auto& e : ev) CHECK(e.round == 1);
}

TEST_CASE("steady state at p=0: outcomes repeat") {
  CodeConfig cfg(3);
  GateSchedule sched(cfg);
  Simulator sim(sched, DepolarizingModel::uniform(0.0), 1);
  sim.inject_pauli(1, cfg.qubit_at({1, 1}), {true, true});
  sim.run_round();
  sim.run_round();
  for (int r = 3; r <= 8; ++r) {
    sim.run_round();
    CHECK(sim.outcomes(r) == sim.outcomes(r - 1));
  }
}

TEST_CASE("single-error locality: any one fault makes at most 2 events per type") {
  for (int d : {2, 3, 4}) {
    CodeConfig cfg(d);
    GateSchedule sched(cfg);
    for (size_t op_i = 0; op_i < sched.ops().size(); ++op_i) {
      const GateOp& op = sched.ops()[op_i];
      auto faults = DepolarizingModel::uniform(0.01).channel(op.kind);
      for (const Fault& f : faults) {
        Simulator sim(sched, DepolarizingModel::uniform(0.0), 1);
        InjectedFault inj{2, static_cast<int>(op_i), f};
        inj.fault.prob = 1.0;
        sim.inject(inj);
        int nz = 0, nx = 0;
        for (int r = 1; r <= 6; ++r) {
          sim.run_round();
          for (const auto& e : sim.events_of_round(r))
            (e.type == StabType::Z ? nz : nx)++;
        }
        CHECK(nz <= 2);
        CHECK(nx <= 2);
      }
    }
  }
}

TEST_CASE("events are linear: XOR of single-fault events equals joint events") {
  CodeConfig cfg(3);
  GateSchedule sched(cfg);
  Rng rng = make_rng(11);
  auto run_with = [&](const std::vector<std::pair<int, Pauli>>& inj) {
    Simulator sim(sched, DepolarizingModel::uniform(0.0), 1);
    for (auto& [q, p] : inj) sim.inject_pauli(2, q, p);
    std::set<DetectionEvent> ev;
    for (int r = 1; r <= 5; ++r) {
      sim.run_round();
      for (const auto& e : sim.events_of_round(r)) ev.insert(e);
    }
    return ev;
  };
  for (int trial = 0; trial < 50; ++trial) {
    int qa = cfg.data_qubits()[rng() % cfg.data_qubits().size()];
    int qb = cfg.data_qubits()[rng() % cfg.data_qubits().size()];
    if (qa == qb) continue;
    Pauli pa{bool(rng() & 1), bool(rng() & 2)};
    Pauli pb{bool(rng() & 1), bool(rng() & 2)};
    if (pa.identity() || pb.identity()) continue;
    auto ea = run_with({{qa, pa}});
    auto eb = run_with({{qb, pb}});
    auto eab = run_with({{qa, pa}, {qb, pb}});
    std::set<DetectionEvent> sym;
    std::set_symmetric_difference(ea.begin(), ea.end(), eb.begin(), eb.end(),
                                  std::inserter(sym, sym.begin()));
    CHECK(sym == eab);
  }
}

TEST_CASE("measurement-only noise: dots fire at rate 2p(1-p)") {
  const double p = 0.02;
  CodeConfig cfg(3);
  GateSchedule sched(cfg);
  Simulator sim(sched, DepolarizingModel::measurement_only(p), 123);
  const int rounds = 90000;  // 12 stabs -> > 1e6 dot samples
  long long fired = 0, samples = 0;
  for (int r = 1; r <= rounds; ++r) {
    sim.run_round();
    if (r < 2) continue;  // skip the reference round
    fired += static_cast<long long>(sim.events_of_round(r).size());
    samples += cfg.num_stabilizers(StabType::Z) + cfg.num_stabilizers(StabType::X);
    if (r % 1000 == 0) sim.trim_history(4);
  }
  double expect = 2 * p * (1 - p);
  double rate = double(fired) / double(samples);
  double sigma = std::sqrt(expect * (1 - expect) / double(samples));
  CHECK(std::abs(rate - expect) < 3 * sigma + 1e-12);
}

TEST_CASE("snapshot/restore round-trips exactly") {
  CodeConfig cfg(3);
  GateSchedule sched(cfg);
  Simulator sim(sched, DepolarizingModel::uniform(0.008), 99);
  for (int r = 0; r < 7; ++r) sim.run_round();
  auto snap = sim.snapshot();
  auto before_frame = sim.frame();
  auto before_out = sim.outcomes(7);

  SUBCASE("no intervening ops") {
    sim.restore(snap);
    CHECK(sim.frame() == before_frame);
    CHECK(sim.outcomes(7) == before_out);
  }
  SUBCASE("after 5 noisy rounds") {
    for (int r = 0; r < 5; ++r) sim.run_round();
    sim.restore(snap);
    CHECK(sim.frame() == before_frame);
    CHECK(sim.rounds_completed() == 7);
    CHECK(sim.outcomes(7) == before_out);
    // Re-running after restore reproduces the same randomness.
    auto a = sim.run_round();
    auto out8 = a;
    sim.restore(snap);
    CHECK(sim.run_round() == out8);
  }
  SUBCASE("perfect round twice gives identical outcomes") {
    auto o1 = sim.run_perfect_round();
    auto copy1 = o1;
    sim.restore(snap);
    auto o2 = sim.run_perfect_round();
    CHECK(copy1 == o2);
  }
  SUBCASE("token from another simulator is rejected") {
    Simulator other(sched, DepolarizingModel::uniform(0.008), 99);
    CHECK_THROWS(other.restore(snap));
  }
}

TEST_CASE("detection_events rejects mismatched shapes") {
  CodeConfig cfg(3);
  std::vector<uint8_t> good(cfg.num_stabilizers(StabType::Z) +
                            cfg.num_stabilizers(StabType::X));
  std::vector<uint8_t> bad(3);
  CHECK_THROWS(detection_events(cfg, good, bad, 2));
  CHECK(detection_events(cfg, good, good, 2).empty());
}
