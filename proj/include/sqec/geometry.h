#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sqec {

// Event/stabilizer type. Z-stabilizers detect X errors, X-stabilizers detect
// Z errors; the two kinds generate independent matching problems.
enum class StabType : uint8_t { Z = 0, X = 1 };

inline char stab_type_char(StabType t) { return t == StabType::Z ? 'Z' : 'X'; }

// Spatial boundaries, per event type. Z-type error chains (X errors on data)
// terminate on the north/south code edges, X-type chains on west/east.
enum BoundaryId : int {
  kBoundaryZNorth = 0,
  kBoundaryZSouth = 1,
  kBoundaryXWest = 2,
  kBoundaryXEast = 3,
};

inline StabType boundary_type(int b) {
  return b <= kBoundaryZSouth ? StabType::Z : StabType::X;
}

// Site coordinate on the (2d-1) x (2d-1) grid. Data qubits occupy sites with
// row+col even (both-even or both-odd), X-stabilizers sit at (even,odd),
// Z-stabilizers at (odd,even).
struct Site {
  int row = 0;
  int col = 0;
  bool operator==(const Site&) const = default;
  auto operator<=>(const Site&) const = default;
};

struct Stabilizer {
  StabType type;
  Site site;
  int index;        // dense index within its type
  int qubit;        // ancilla qubit id
  // Data-qubit neighbors in CNOT order N,W,E,S; -1 where the neighbor falls
  // outside the grid (boundary stabilizer).
  std::array<int, 4> data_neighbors{-1, -1, -1, -1};
  int weight() const {
    int w = 0;
    for (int q : data_neighbors) w += (q >= 0);
    return w;
  }
};

// Static description of a distance-d square surface code patch: qubit ids,
// stabilizer layout and the supports of the two tracked logical operators.
class CodeConfig {
 public:
  explicit CodeConfig(int distance);

  int distance() const { return d_; }
  int grid_extent() const { return 2 * d_ - 1; }
  int num_qubits() const { return num_qubits_; }
  int num_data_qubits() const { return static_cast<int>(data_qubits_.size()); }

  bool is_data_site(Site s) const;
  bool is_stab_site(Site s) const;
  int qubit_at(Site s) const;  // -1 if site outside grid
  Site site_of(int qubit) const { return sites_[qubit]; }
  bool is_data_qubit(int qubit) const { return data_index_[qubit] >= 0; }
  int data_index(int qubit) const { return data_index_[qubit]; }

  const std::vector<int>& data_qubits() const { return data_qubits_; }
  const std::vector<Stabilizer>& stabilizers(StabType t) const {
    return stabs_[static_cast<int>(t)];
  }
  int num_stabilizers(StabType t) const {
    return static_cast<int>(stabs_[static_cast<int>(t)].size());
  }
  const Stabilizer* stabilizer_at(Site s) const;  // nullptr if none

  // Z_L support: the top row of data qubits (Z operator crossing west-east).
  // Its eigenvalue flips when an X chain crosses it an odd number of times.
  const std::vector<int>& logical_z_support() const { return logical_z_; }
  // X_L support: the left column of data qubits (X operator crossing
  // north-south); flipped by Z chains crossing west-east.
  const std::vector<int>& logical_x_support() const { return logical_x_; }

  // Boundary adjacency of a data qubit within one event-type graph:
  // returns the boundary id the qubit touches, or -1.
  int data_boundary(int qubit, StabType t) const;

 private:
  int d_;
  int num_qubits_ = 0;
  std::vector<Site> sites_;                 // qubit id -> site
  std::vector<int> qubit_grid_;             // site -> qubit id
  std::vector<int> data_qubits_;
  std::vector<int> data_index_;             // qubit id -> dense data index or -1
  std::array<std::vector<Stabilizer>, 2> stabs_;
  std::vector<int> stab_grid_;              // site -> (type<<16|index)+1, 0 if none
  std::vector<int> logical_z_;
  std::vector<int> logical_x_;
};

}  // namespace sqec
