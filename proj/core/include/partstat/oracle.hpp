#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "partstat/combinatorics.hpp"
#include "partstat/correlated.hpp"
#include "partstat/ensembles.hpp"
#include "partstat/types.hpp"

// Brute-force reference computations. Everything here is built from primitive
// arithmetic on point masses: product laws from the ratio recursion
// w(n + e_j) = q_j w(n) with numerically summed normalizers, the correlated
// family by inclusion-exclusion over its tail function. Nothing in this module
// evaluates the closed forms it is used to check.

namespace partstat {

struct ProductLaw {
  EnsembleKind kind;
  QVector q;
};

/// Any law the oracle can enumerate.
using Law = std::variant<ProductLaw, CorrelatedParams>;

std::size_t law_size(const Law& law);

/// Per-state cutoffs M_j and a certified bound on the mass outside the box
/// [0, M_1] x ... x [0, M_k].
class TruncationSpec {
 public:
  // `marginal_tails[j]` bounds P(n_j > M_j); `certified_tail_bound` bounds
  // the total mass outside the box.
  TruncationSpec(std::vector<Count> cutoffs, std::vector<double> marginal_tails, double certified_tail_bound);

  /// Smallest box whose outside mass is provably below `tolerance`:
  /// 1 - prod (1 - q_j^{M_j+1}) for Bose-Einstein, 0 for the capped laws and
  /// the union bound sum_j omega q_0j q_j^{M_j} for the correlated family.
  static TruncationSpec for_law(const Law& law, double tolerance = 1e-12);

  std::span<const Count> cutoffs() const noexcept { return cutoffs_; }
  double certified_tail_bound() const noexcept { return tail_; }
  // Per-state P(n_j > M_j), analytic.
  std::span<const double> marginal_tails() const noexcept { return marginal_tails_; }

 private:
  std::vector<Count> cutoffs_;
  std::vector<double> marginal_tails_;
  double tail_;
};

/// Exact point masses on the truncation box, stored row-major.
class MassTable {
 public:
  MassTable(BoxIndexer box, std::vector<double> masses, double certified_tail);

  const BoxIndexer& box() const noexcept { return box_; }
  std::span<const double> masses() const noexcept { return masses_; }
  double at(std::span<const Count> n) const { return masses_.at(box_.index(n)); }
  double certified_tail() const noexcept { return tail_; }
  // Compensated lexicographic sum of the stored masses.
  double total() const noexcept { return total_; }

 private:
  BoxIndexer box_;
  std::vector<double> masses_;
  double tail_;
  double total_;
};

MassTable enumerate_masses(const Law& law, const TruncationSpec& trunc, const EnumerationBudget& budget = {});

/// A truncated quantity and an analytic bound on what the truncation dropped.
struct OracleEstimate {
  double value;
  double error_bound;
};

OracleEstimate oracle_mean(const Law& law, const TruncationSpec& trunc, std::size_t j,
                           const EnumerationBudget& budget = {});

struct OracleMoments {
  std::vector<double> means;
  SquareMatrix second;       // E(n_i n_j)
  SquareMatrix covariances;  // second - means means^T
};

/// Truncated first and second moments of a mass table.
OracleMoments oracle_moments(const MassTable& table);

/// -sum p ln p over the table (joint entropy of the truncated law).
double oracle_entropy(const MassTable& table);

/// Entropy of the marginal law of n_j by direct summation of -p ln p, with
/// the geometric remainder beyond the cutoff as error bound.
OracleEstimate oracle_marginal_entropy(const Law& law, std::size_t j, double tail_tolerance = 1e-15);

enum class ToleranceKind {
  Absolute,  // |target - oracle| <= tolerance
  Relative,  // |target - oracle| / |oracle| <= tolerance
  AtLeast,   // target >= oracle (oracle holds the threshold)
};

enum class CheckStatus { Passed, Failed, Skipped };

struct VerificationCheck {
  std::string name;
  std::string description;
  double target = 0.0;  // value from the code under test (worst point for sweeps)
  double oracle = 0.0;  // independent reference at the same point
  double abs_discrepancy = 0.0;
  double rel_discrepancy = 0.0;
  double tolerance = 0.0;
  ToleranceKind tolerance_kind = ToleranceKind::Absolute;
  CheckStatus status = CheckStatus::Skipped;
  std::uint64_t budget_used = 0;  // enumerated terms / evaluated points
};

struct VerificationReport {
  std::vector<VerificationCheck> checks;

  std::size_t count(CheckStatus status) const noexcept;
  // No check failed (skipped checks do not fail the report).
  bool all_passed() const noexcept { return count(CheckStatus::Failed) == 0; }
};

struct SuiteBudget {
  // A check whose planned work exceeds this is skipped; 0 skips everything.
  std::uint64_t max_terms = 2'000'000;
};

/// Runs every closed-form-versus-oracle cross-check of the library.
VerificationReport run_verification_suite(const SuiteBudget& budget = {});

std::string to_string(CheckStatus status);
std::string to_string(ToleranceKind kind);

}  // namespace partstat
