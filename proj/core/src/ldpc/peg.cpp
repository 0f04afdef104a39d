#include "recon/ldpc/peg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace recon::ldpc {

bool DegreeDistribution::valid() const noexcept {
  if (node_fractions.empty()) return false;
  double total = 0;
  for (auto& [deg, frac] : node_fractions) {
    if (deg < 1 || frac <= 0.0) return false;
    total += frac;
  }
  return std::fabs(total - 1.0) < 1e-6;
}

double DegreeDistribution::average_degree() const noexcept {
  double avg = 0;
  for (auto& [deg, frac] : node_fractions) avg += deg * frac;
  return avg;
}

std::vector<uint32_t> DegreeDistribution::realize(uint32_t n_cols) const {
  if (!valid()) throw std::invalid_argument("DegreeDistribution: fractions must sum to 1");
  struct Part {
    uint32_t deg;
    uint32_t count;
    double remainder;
  };
  std::vector<Part> parts;
  uint32_t assigned = 0;
  for (auto& [deg, frac] : node_fractions) {
    double exact = frac * n_cols;
    uint32_t whole = static_cast<uint32_t>(exact);
    parts.push_back({deg, whole, exact - whole});
    assigned += whole;
  }
  std::sort(parts.begin(), parts.end(),
            [](const Part& a, const Part& b) { return a.remainder > b.remainder; });
  for (size_t i = 0; assigned < n_cols; ++i, ++assigned) parts[i % parts.size()].count++;

  std::vector<uint32_t> degrees;
  degrees.reserve(n_cols);
  for (auto& p : parts)
    for (uint32_t i = 0; i < p.count; ++i) degrees.push_back(p.deg);
  std::sort(degrees.begin(), degrees.end());
  return degrees;
}

ParityCheckMatrix peg_construct(uint32_t n_cols, const DegreeDistribution& dist,
                                uint32_t n_rows, uint64_t seed, PegOptions opts) {
  if (n_rows == 0 || n_rows >= n_cols)
    throw std::invalid_argument("peg_construct: need 0 < m < N");
  std::vector<uint32_t> degrees = dist.realize(n_cols);
  for (uint32_t d : degrees)
    if (d > n_rows)
      throw std::invalid_argument("peg_construct: column degree exceeds row count");

  Rng rng = Rng(seed).derive(0x9E6);

  // Adjacency grown incrementally.
  std::vector<std::vector<uint32_t>> rows_of_col(n_cols);
  std::vector<std::vector<uint32_t>> cols_of_row(n_rows);
  std::vector<uint32_t> row_deg(n_rows, 0);

  // BFS scratch: stamped visit marks, current frontier, last level.
  std::vector<uint32_t> check_stamp(n_rows, UINT32_MAX);
  std::vector<uint32_t> var_stamp(n_cols, UINT32_MAX);
  std::vector<uint32_t> frontier, next_frontier, last_level;
  uint32_t stamp = 0;

  auto pick_min_degree = [&](auto&& eligible) -> uint32_t {
    // Reservoir-style uniform pick among minimal-degree eligible checks.
    uint32_t best_deg = UINT32_MAX, chosen = UINT32_MAX, ties = 0;
    for (uint32_t r = 0; r < n_rows; ++r) {
      if (!eligible(r)) continue;
      if (row_deg[r] < best_deg) {
        best_deg = row_deg[r];
        chosen = r;
        ties = 1;
      } else if (row_deg[r] == best_deg) {
        ++ties;
        if (rng.uniform_below(ties) == 0) chosen = r;
      }
    }
    return chosen;
  };

  auto pick_from_list = [&](const std::vector<uint32_t>& cands) -> uint32_t {
    uint32_t best_deg = UINT32_MAX, chosen = UINT32_MAX, ties = 0;
    for (uint32_t r : cands) {
      if (row_deg[r] < best_deg) {
        best_deg = row_deg[r];
        chosen = r;
        ties = 1;
      } else if (row_deg[r] == best_deg) {
        ++ties;
        if (rng.uniform_below(ties) == 0) chosen = r;
      }
    }
    return chosen;
  };

  for (uint32_t col = 0; col < n_cols; ++col) {
    uint32_t want = degrees[col];
    for (uint32_t k = 0; k < want; ++k) {
      uint32_t pick;
      if (k == 0) {
        pick = pick_min_degree([](uint32_t) { return true; });
      } else {
        // BFS from the column through the current subgraph.
        ++stamp;
        uint32_t covered = 0;
        frontier.clear();
        for (uint32_t r : rows_of_col[col]) {
          check_stamp[r] = stamp;
          frontier.push_back(r);
          ++covered;
        }
        var_stamp[col] = stamp;
        last_level = frontier;
        for (uint32_t level = 1; level < opts.bfs_levels && covered < n_rows; ++level) {
          next_frontier.clear();
          for (uint32_t r : frontier) {
            for (uint32_t c : cols_of_row[r]) {
              if (var_stamp[c] == stamp) continue;
              var_stamp[c] = stamp;
              for (uint32_t r2 : rows_of_col[c]) {
                if (check_stamp[r2] == stamp) continue;
                check_stamp[r2] = stamp;
                next_frontier.push_back(r2);
                ++covered;
              }
            }
          }
          if (next_frontier.empty()) break;  // neighborhood stopped growing
          frontier.swap(next_frontier);
          last_level = frontier;
        }
        if (covered < n_rows) {
          pick = pick_min_degree([&](uint32_t r) { return check_stamp[r] != stamp; });
        } else {
          // Everything reachable: fall back to the deepest BFS level.
          pick = pick_from_list(last_level);
        }
      }
      if (pick == UINT32_MAX)
        throw std::invalid_argument("peg_construct: infeasible distribution");
      rows_of_col[col].push_back(pick);
      cols_of_row[pick].push_back(col);
      row_deg[pick]++;
    }
  }

  std::vector<std::pair<uint32_t, uint32_t>> edges;
  edges.reserve(std::accumulate(degrees.begin(), degrees.end(), size_t{0}));
  for (uint32_t c = 0; c < n_cols; ++c)
    for (uint32_t r : rows_of_col[c]) edges.emplace_back(r, c);
  return ParityCheckMatrix(n_rows, n_cols, std::move(edges));
}

}  // namespace recon::ldpc
