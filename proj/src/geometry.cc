#include "sqec/geometry.h"

namespace sqec {

CodeConfig::CodeConfig(int distance) : d_(distance) {
  if (d_ < 2) throw std::invalid_argument("code distance must be >= 2");
  const int n = grid_extent();
  qubit_grid_.assign(n * n, -1);
  stab_grid_.assign(n * n, 0);

  auto grid_at = [n](std::vector<int>& g, Site s) -> int& {
    return g[s.row * n + s.col];
  };

  // Data qubits first (row-major), then ancillas, one per stabilizer.
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if ((r % 2) == (c % 2)) {
        Site s{r, c};
        grid_at(qubit_grid_, s) = num_qubits_;
        sites_.push_back(s);
        data_qubits_.push_back(num_qubits_);
        ++num_qubits_;
      }
    }
  }
  data_index_.assign(num_qubits_, -1);
  for (size_t i = 0; i < data_qubits_.size(); ++i)
    data_index_[data_qubits_[i]] = static_cast<int>(i);

  auto add_stabs = [&](StabType t) {
    auto& vec = stabs_[static_cast<int>(t)];
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        bool x_site = (r % 2 == 0) && (c % 2 == 1);
        bool z_site = (r % 2 == 1) && (c % 2 == 0);
        if ((t == StabType::X && !x_site) || (t == StabType::Z && !z_site))
          continue;
        Stabilizer st;
        st.type = t;
        st.site = {r, c};
        st.index = static_cast<int>(vec.size());
        st.qubit = num_qubits_;
        grid_at(qubit_grid_, st.site) = num_qubits_;
        sites_.push_back(st.site);
        ++num_qubits_;
        // CNOT partner order N, W, E, S.
        const Site nbrs[4] = {{r - 1, c}, {r, c - 1}, {r, c + 1}, {r + 1, c}};
        for (int k = 0; k < 4; ++k) {
          const Site& q = nbrs[k];
          if (q.row < 0 || q.col < 0 || q.row >= n || q.col >= n) continue;
          st.data_neighbors[k] = grid_at(qubit_grid_, q);
        }
        grid_at(stab_grid_, st.site) =
            (static_cast<int>(t) << 16 | st.index) + 1;
        vec.push_back(st);
      }
    }
  };
  add_stabs(StabType::Z);
  add_stabs(StabType::X);
  data_index_.resize(num_qubits_, -1);

  for (int q : data_qubits_) {
    Site s = sites_[q];
    if (s.row == 0) logical_z_.push_back(q);
    if (s.col == 0) logical_x_.push_back(q);
  }
}

bool CodeConfig::is_data_site(Site s) const {
  if (s.row < 0 || s.col < 0 || s.row >= grid_extent() ||
      s.col >= grid_extent())
    return false;
  return (s.row % 2) == (s.col % 2);
}

bool CodeConfig::is_stab_site(Site s) const {
  if (s.row < 0 || s.col < 0 || s.row >= grid_extent() ||
      s.col >= grid_extent())
    return false;
  return (s.row % 2) != (s.col % 2);
}

int CodeConfig::qubit_at(Site s) const {
  if (s.row < 0 || s.col < 0 || s.row >= grid_extent() ||
      s.col >= grid_extent())
    return -1;
  return qubit_grid_[s.row * grid_extent() + s.col];
}

const Stabilizer* CodeConfig::stabilizer_at(Site s) const {
  if (!is_stab_site(s)) return nullptr;
  int v = stab_grid_[s.row * grid_extent() + s.col];
  if (v == 0) return nullptr;
  --v;
  return &stabs_[v >> 16][v & 0xffff];
}

int CodeConfig::data_boundary(int qubit, StabType t) const {
  Site s = sites_[qubit];
  if (t == StabType::Z) {
    // Even-even data qubits on the top/bottom rows have a single Z neighbor.
    if (s.row == 0 && s.col % 2 == 0) return kBoundaryZNorth;
    if (s.row == grid_extent() - 1 && s.col % 2 == 0) return kBoundaryZSouth;
  } else {
    if (s.col == 0 && s.row % 2 == 0) return kBoundaryXWest;
    if (s.col == grid_extent() - 1 && s.row % 2 == 0) return kBoundaryXEast;
  }
  return -1;
}

}  // namespace sqec
