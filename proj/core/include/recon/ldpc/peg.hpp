#pragma once

#include <cstdint>
#include <vector>

#include "recon/ldpc/matrix.hpp"
#include "recon/rng.hpp"

namespace recon::ldpc {

/// Column-degree distribution, node perspective: fraction of columns
/// carrying each degree. Fractions must sum to 1.
struct DegreeDistribution {
  std::vector<std::pair<uint32_t, double>> node_fractions;

  bool valid() const noexcept;
  double average_degree() const noexcept;

  /// Exact per-column degrees for N columns (largest-remainder rounding),
  /// sorted ascending as PEG consumes them.
  std::vector<uint32_t> realize(uint32_t n_cols) const;
};

struct PegOptions {
  /// BFS lookahead depth in check-node levels. Level 1 excludes the direct
  /// neighbors, level 2 additionally excludes checks at bipartite distance
  /// 3 (which is what guarantees girth >= 6 while the graph is sparse
  /// enough). Deeper lookahead buys girth at quadratic cost.
  uint32_t bfs_levels = 2;
};

/// Progressive edge growth: places each column's edges on the check node
/// of minimal current degree outside the BFS neighborhood of the column
/// (deepest-level checks when the neighborhood already covers everything).
/// Ties break uniformly at random from the seed; identical seeds yield
/// identical matrices.
ParityCheckMatrix peg_construct(uint32_t n_cols, const DegreeDistribution& dist,
                                uint32_t n_rows, uint64_t seed, PegOptions opts = {});

}  // namespace recon::ldpc
