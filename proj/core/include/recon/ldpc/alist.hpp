#pragma once

#include <string>

#include "recon/ldpc/matrix.hpp"

namespace recon::ldpc {

/// MacKay alist format: "N m", max column/row degrees, per-column and
/// per-row degree lists, then 1-indexed adjacency lists padded with zeros
/// up to the max degree (padding entries are ignored on load).
ParityCheckMatrix load_alist(const std::string& path);

void save_alist(const ParityCheckMatrix& matrix, const std::string& path);

}  // namespace recon::ldpc
