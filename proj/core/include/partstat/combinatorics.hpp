#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "partstat/types.hpp"

namespace partstat {

/// Work limit for exhaustive enumerations (number of visited terms).
struct EnumerationBudget {
  std::uint64_t max_terms = 2'000'000;
};

/// C(n, r), saturating at UINT64_MAX instead of overflowing.
std::uint64_t binomial_saturating(std::uint64_t n, std::uint64_t r) noexcept;

/// Number of compositions of `total` into `parts` non-negative parts,
/// C(total + parts - 1, parts - 1), saturating.
std::uint64_t composition_count(std::uint64_t total, std::size_t parts) noexcept;

/// Visits every composition n_1 + ... + n_parts = total in ascending
/// lexicographic order, from (0, ..., 0, total) to (total, 0, ..., 0).
/// Throws BudgetError before visiting anything when the count exceeds the
/// budget.
void for_each_composition(Count total, std::size_t parts, const EnumerationBudget& budget,
                          const std::function<void(std::span<const Count>)>& visit);

/// Row-major indexing of the box [0, M_1] x ... x [0, M_k].
class BoxIndexer {
 public:
  explicit BoxIndexer(std::vector<Count> cutoffs);

  std::size_t dims() const noexcept { return cutoffs_.size(); }
  std::span<const Count> cutoffs() const noexcept { return cutoffs_; }
  // Saturates at UINT64_MAX.
  std::uint64_t cell_count() const noexcept { return cells_; }

  bool contains(std::span<const Count> n) const noexcept;
  std::uint64_t index(std::span<const Count> n) const noexcept;
  void decode(std::uint64_t index, std::span<Count> out) const noexcept;

  // Lexicographic walk over all cells; `visit` receives (index, n).
  void for_each(const std::function<void(std::uint64_t, std::span<const Count>)>& visit) const;

 private:
  std::vector<Count> cutoffs_;
  std::vector<std::uint64_t> strides_;
  std::uint64_t cells_ = 1;
};

}  // namespace partstat
