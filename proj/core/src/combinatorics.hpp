// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace facetpart::detail {

inline double binomial(std::size_t n, std::size_t r) {
  if (r > n) return 0.0;
  double c = 1.0;
  for (std::size_t i = 0; i < r; ++i) {
    c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
  }
  return c;
}

// Visits every increasing index tuple of length m over [0, n) in
// lexicographic order.
template <typename F>
inline void for_each_tuple(std::size_t n, std::size_t m, F&& visit) {
  if (m > n) return;
  std::vector<std::size_t> idx(m);
  for (std::size_t i = 0; i < m; ++i) idx[i] = i;
  while (true) {
    visit(std::span<const std::size_t>(idx));
    std::size_t i = m;
    while (i > 0 && idx[i - 1] == n - m + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < m; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace facetpart::detail
