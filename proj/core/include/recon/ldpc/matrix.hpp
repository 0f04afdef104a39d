#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "recon/bitframe.hpp"

namespace recon::ldpc {

/// Sparse binary parity-check matrix in CSR form for both orientations.
/// Immutable after construction; shareable across concurrent decoders.
class ParityCheckMatrix {
 public:
  /// edges are (row, col) pairs; duplicates are rejected, every column
  /// must have degree >= 1 and the rate must land strictly in (0, 1).
  ParityCheckMatrix(uint32_t rows, uint32_t cols,
                    std::vector<std::pair<uint32_t, uint32_t>> edges);

  uint32_t rows() const noexcept { return m_; }     // syndrome length m
  uint32_t cols() const noexcept { return n_; }     // frame size N
  size_t edge_count() const noexcept { return col_of_edge_.size(); }
  double rate() const noexcept { return 1.0 - static_cast<double>(m_) / n_; }

  std::span<const uint32_t> row_neighbors(uint32_t r) const noexcept {
    return {col_of_edge_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  /// Edge indices (into the row-major edge order) incident to a column.
  std::span<const uint32_t> col_edges(uint32_t c) const noexcept {
    return {edge_of_col_.data() + col_ptr_[c], col_ptr_[c + 1] - col_ptr_[c]};
  }
  std::span<const uint32_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const uint32_t> col_of_edge() const noexcept { return col_of_edge_; }

  uint32_t col_degree(uint32_t c) const noexcept { return col_ptr_[c + 1] - col_ptr_[c]; }
  uint32_t row_degree(uint32_t r) const noexcept { return row_ptr_[r + 1] - row_ptr_[r]; }

  /// s_j = XOR of frame bits in row j's support. frame must have N bits.
  BitFrame syndrome(const BitFrame& frame) const;

  /// Girth of the Tanner graph (shortest cycle length, always even);
  /// 0 if the graph is acyclic. BFS per check node; meant for code
  /// construction reporting, not hot paths.
  uint32_t girth() const;

  /// FNV-1a over the canonical edge list; used for manifest integrity.
  uint64_t content_hash() const noexcept;

 private:
  uint32_t m_ = 0, n_ = 0;
  std::vector<uint32_t> row_ptr_;      // m+1
  std::vector<uint32_t> col_of_edge_;  // row-major edges -> column
  std::vector<uint32_t> col_ptr_;      // n+1
  std::vector<uint32_t> edge_of_col_;  // column-major -> row-major edge index
};

}  // namespace recon::ldpc
