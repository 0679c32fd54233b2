#include "partstat/combinatorics.hpp"

#include <limits>
#include <string>

#include "partstat/error.hpp"

namespace partstat {

namespace {
constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();
__extension__ using Wide = unsigned __int128;

std::uint64_t mul_saturating(std::uint64_t a, std::uint64_t b) noexcept {
  if (a != 0 && b > kSaturated / a) return kSaturated;
  return a * b;
}
}  // namespace

std::uint64_t binomial_saturating(std::uint64_t n, std::uint64_t r) noexcept {
  if (r > n) return 0;
  if (r > n - r) r = n - r;
  // c * (n - r + i) / i stays integral at every step; use 128-bit to hold the
  // intermediate product.
  Wide c = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    c = c * (n - r + i) / i;
    if (c > kSaturated) return kSaturated;
  }
  return static_cast<std::uint64_t>(c);
}

std::uint64_t composition_count(std::uint64_t total, std::size_t parts) noexcept {
  if (parts == 0) return total == 0 ? 1 : 0;
  if (total > kSaturated - parts) return kSaturated;
  return binomial_saturating(total + parts - 1, parts - 1);
}

void for_each_composition(Count total, std::size_t parts, const EnumerationBudget& budget,
                          const std::function<void(std::span<const Count>)>& visit) {
  if (parts == 0) {
    throw DomainError("for_each_composition: need at least one part");
  }
  const std::uint64_t count = composition_count(total, parts);
  if (count > budget.max_terms) {
    throw BudgetError("composition enumeration of N=" + std::to_string(total) + " into k=" +
                      std::to_string(parts) + " parts needs " +
                      (count == kSaturated ? std::string("> 2^64") : std::to_string(count)) +
                      " terms, budget is " + std::to_string(budget.max_terms));
  }
  // n[0..parts-2] are free; n[parts-1] takes the remainder.
  std::vector<Count> n(parts, 0);
  n[parts - 1] = total;
  while (true) {
    visit(n);
    if (parts == 1) return;
    // Advance the odometer over the free coordinates, keeping their sum <= total.
    std::size_t pos = parts - 2;
    while (true) {
      if (n[parts - 1] > 0) {
        ++n[pos];
        --n[parts - 1];
        break;
      }
      // Roll this coordinate back into the remainder and carry.
      n[parts - 1] += n[pos];
      n[pos] = 0;
      if (pos == 0) return;
      --pos;
    }
  }
}

BoxIndexer::BoxIndexer(std::vector<Count> cutoffs) : cutoffs_(std::move(cutoffs)) {
  if (cutoffs_.empty()) throw DomainError("BoxIndexer: need at least one dimension");
  strides_.assign(cutoffs_.size(), 1);
  cells_ = 1;
  for (std::size_t d = cutoffs_.size(); d-- > 0;) {
    strides_[d] = cells_;
    cells_ = mul_saturating(cells_, std::uint64_t{cutoffs_[d]} + 1);
  }
}

bool BoxIndexer::contains(std::span<const Count> n) const noexcept {
  if (n.size() != cutoffs_.size()) return false;
  for (std::size_t d = 0; d < n.size(); ++d) {
    if (n[d] > cutoffs_[d]) return false;
  }
  return true;
}

std::uint64_t BoxIndexer::index(std::span<const Count> n) const noexcept {
  std::uint64_t idx = 0;
  for (std::size_t d = 0; d < n.size(); ++d) idx += strides_[d] * n[d];
  return idx;
}

void BoxIndexer::decode(std::uint64_t index, std::span<Count> out) const noexcept {
  for (std::size_t d = 0; d < cutoffs_.size(); ++d) {
    out[d] = static_cast<Count>(index / strides_[d]);
    index %= strides_[d];
  }
}

void BoxIndexer::for_each(const std::function<void(std::uint64_t, std::span<const Count>)>& visit) const {
  std::vector<Count> n(cutoffs_.size(), 0);
  for (std::uint64_t idx = 0; idx < cells_; ++idx) {
    visit(idx, n);
    for (std::size_t d = cutoffs_.size(); d-- > 0;) {
      if (n[d] < cutoffs_[d]) {
        ++n[d];
        break;
      }
      n[d] = 0;
    }
  }
}

}  // namespace partstat
