#include "recon/ldpc/matrix.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace recon::ldpc {

ParityCheckMatrix::ParityCheckMatrix(uint32_t rows, uint32_t cols,
                                     std::vector<std::pair<uint32_t, uint32_t>> edges)
    : m_(rows), n_(cols) {
  if (rows == 0 || cols == 0 || rows >= cols)
    throw std::invalid_argument("ParityCheckMatrix: rate must lie in (0,1)");
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw std::invalid_argument("ParityCheckMatrix: duplicate edge");

  row_ptr_.assign(m_ + 1, 0);
  col_ptr_.assign(n_ + 1, 0);
  col_of_edge_.resize(edges.size());
  for (auto& [r, c] : edges) {
    if (r >= m_ || c >= n_) throw std::invalid_argument("ParityCheckMatrix: index out of range");
    row_ptr_[r + 1]++;
    col_ptr_[c + 1]++;
  }
  for (uint32_t c = 0; c < n_; ++c)
    if (col_ptr_[c + 1] == 0)
      throw std::invalid_argument("ParityCheckMatrix: zero-degree column");
  for (uint32_t r = 0; r < m_; ++r) row_ptr_[r + 1] += row_ptr_[r];
  for (uint32_t c = 0; c < n_; ++c) col_ptr_[c + 1] += col_ptr_[c];

  for (size_t e = 0; e < edges.size(); ++e) col_of_edge_[e] = edges[e].second;

  edge_of_col_.resize(edges.size());
  std::vector<uint32_t> fill(n_, 0);
  for (size_t e = 0; e < edges.size(); ++e) {
    uint32_t c = edges[e].second;
    edge_of_col_[col_ptr_[c] + fill[c]++] = static_cast<uint32_t>(e);
  }
}

BitFrame ParityCheckMatrix::syndrome(const BitFrame& frame) const {
  if (frame.size() != n_)
    throw std::invalid_argument("syndrome: frame length != N");
  BitFrame s(m_);
  for (uint32_t r = 0; r < m_; ++r) {
    bool acc = false;
    for (uint32_t c : row_neighbors(r)) acc ^= frame.get(c);
    s.set(r, acc);
  }
  return s;
}

uint32_t ParityCheckMatrix::girth() const {
  // BFS from every check node over the bipartite graph; the first time a
  // BFS revisits an already-reached node through a new path, the cycle
  // length is dist(u) + dist(v) + 1 in bipartite hops.
  uint32_t best = 0;
  std::vector<uint32_t> dist_check(m_), dist_var(n_);
  std::vector<uint32_t> stamp_check(m_, UINT32_MAX), stamp_var(n_, UINT32_MAX);

  // column -> rows adjacency
  std::vector<uint32_t> row_of_edge(col_of_edge_.size());
  for (uint32_t r = 0; r < m_; ++r)
    for (uint32_t e = row_ptr_[r]; e < row_ptr_[r + 1]; ++e) row_of_edge[e] = r;

  for (uint32_t start = 0; start < m_; ++start) {
    std::queue<std::pair<uint32_t, bool>> bfs;  // (node, is_check)
    stamp_check[start] = start;
    dist_check[start] = 0;
    bfs.push({start, true});
    uint32_t local = UINT32_MAX;
    while (!bfs.empty()) {
      auto [u, is_check] = bfs.front();
      bfs.pop();
      uint32_t du = is_check ? dist_check[u] : dist_var[u];
      if (local != UINT32_MAX && 2 * du >= local) break;
      if (is_check) {
        for (uint32_t e = row_ptr_[u]; e < row_ptr_[u + 1]; ++e) {
          uint32_t v = col_of_edge_[e];
          if (stamp_var[v] != start) {
            stamp_var[v] = start;
            dist_var[v] = du + 1;
            bfs.push({v, false});
          } else if (dist_var[v] == du + 1) {
            // cross edge between BFS levels closes a cycle of 2(du+1)
            local = std::min(local, 2 * (du + 1));
          }
        }
      } else {
        for (uint32_t ei = col_ptr_[u]; ei < col_ptr_[u + 1]; ++ei) {
          uint32_t r = row_of_edge[edge_of_col_[ei]];
          if (stamp_check[r] != start) {
            stamp_check[r] = start;
            dist_check[r] = du + 1;
            bfs.push({r, true});
          } else if (dist_check[r] == du + 1) {
            local = std::min(local, 2 * (du + 1));
          }
        }
      }
    }
    if (local != UINT32_MAX) {
      if (best == 0 || local < best) best = local;
      if (best == 4) break;  // cannot do worse
    }
  }
  return best;
}

uint64_t ParityCheckMatrix::content_hash() const noexcept {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](uint32_t v) {
    for (int i = 0; i < 4; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 1099511628211ull;
    }
  };
  mix(m_);
  mix(n_);
  for (uint32_t r = 0; r < m_; ++r) {
    for (uint32_t c : row_neighbors(r)) {
      mix(r);
      mix(c);
    }
  }
  return h;
}

}  // namespace recon::ldpc
