#include "recon/ldpc/alist.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace recon::ldpc {

namespace {

struct TokenReader {
  std::ifstream in;
  std::string path;

  explicit TokenReader(const std::string& p) : in(p), path(p) {
    if (!in) throw std::runtime_error("alist: cannot open " + p);
  }

  long next() {
    long v;
    if (!(in >> v)) throw std::runtime_error("alist: truncated file " + path);
    return v;
  }
};

}  // namespace

ParityCheckMatrix load_alist(const std::string& path) {
  TokenReader tok(path);
  long ncols = tok.next();
  long nrows = tok.next();
  if (ncols <= 0 || nrows <= 0)
    throw std::runtime_error("alist: malformed header in " + path);
  long max_col_deg = tok.next();
  long max_row_deg = tok.next();
  if (max_col_deg < 0 || max_row_deg < 0)
    throw std::runtime_error("alist: malformed header in " + path);

  std::vector<long> col_deg(ncols), row_deg(nrows);
  for (long c = 0; c < ncols; ++c) {
    col_deg[c] = tok.next();
    if (col_deg[c] < 0 || col_deg[c] > max_col_deg)
      throw std::runtime_error("alist: bad column degree in " + path);
  }
  for (long r = 0; r < nrows; ++r) {
    row_deg[r] = tok.next();
    if (row_deg[r] < 0 || row_deg[r] > max_row_deg)
      throw std::runtime_error("alist: bad row degree in " + path);
  }

  std::vector<std::pair<uint32_t, uint32_t>> edges;
  for (long c = 0; c < ncols; ++c) {
    for (long j = 0; j < max_col_deg; ++j) {
      long r = tok.next();
      if (r == 0) continue;  // zero padding
      if (r < 1 || r > nrows)
        throw std::runtime_error("alist: row index out of range in " + path);
      edges.emplace_back(static_cast<uint32_t>(r - 1), static_cast<uint32_t>(c));
    }
  }
  // The row-major lists restate the same adjacency; consume and verify the
  // edge count so damaged files are caught.
  size_t row_entries = 0;
  for (long r = 0; r < nrows; ++r) {
    for (long j = 0; j < max_row_deg; ++j) {
      long c = tok.next();
      if (c == 0) continue;
      if (c < 1 || c > ncols)
        throw std::runtime_error("alist: column index out of range in " + path);
      ++row_entries;
    }
  }
  if (row_entries != edges.size())
    throw std::runtime_error("alist: row/column lists disagree in " + path);

  return ParityCheckMatrix(static_cast<uint32_t>(nrows),
                           static_cast<uint32_t>(ncols), std::move(edges));
}

void save_alist(const ParityCheckMatrix& matrix, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("alist: cannot write " + path);

  uint32_t n = matrix.cols(), m = matrix.rows();
  // column -> rows adjacency
  std::vector<std::vector<uint32_t>> cols(n);
  for (uint32_t r = 0; r < m; ++r)
    for (uint32_t c : matrix.row_neighbors(r)) cols[c].push_back(r);

  uint32_t max_col = 0, max_row = 0;
  for (uint32_t c = 0; c < n; ++c)
    max_col = std::max(max_col, static_cast<uint32_t>(cols[c].size()));
  for (uint32_t r = 0; r < m; ++r) max_row = std::max(max_row, matrix.row_degree(r));

  out << n << ' ' << m << '\n' << max_col << ' ' << max_row << '\n';
  for (uint32_t c = 0; c < n; ++c) out << cols[c].size() << (c + 1 < n ? ' ' : '\n');
  for (uint32_t r = 0; r < m; ++r)
    out << matrix.row_degree(r) << (r + 1 < m ? ' ' : '\n');
  for (uint32_t c = 0; c < n; ++c) {
    for (uint32_t j = 0; j < max_col; ++j) {
      out << (j < cols[c].size() ? cols[c][j] + 1 : 0) << (j + 1 < max_col ? ' ' : '\n');
    }
  }
  for (uint32_t r = 0; r < m; ++r) {
    auto nb = matrix.row_neighbors(r);
    for (uint32_t j = 0; j < max_row; ++j)
      out << (j < nb.size() ? nb[j] + 1 : 0) << (j + 1 < max_row ? ' ' : '\n');
  }
  if (!out) throw std::runtime_error("alist: write failed for " + path);
}

}  // namespace recon::ldpc
