#pragma once

#include <cstddef>
#include <vector>

#include "partstat/combinatorics.hpp"
#include "partstat/types.hpp"

namespace partstat {

/// Parameters (q_j, q_0j, omega) of the correlated occupancy family whose
/// tail probabilities are
///
///   P(n+) = omega * prod_{j : n_j >= 1} q_0j q_j^{n_j - 1},   n != 0.
///
/// q_0j governs the first particle in state j and q_j every further one;
/// omega != 1 couples the states. Feasibility requires a non-negative vacuum
/// mass, omega (1 - prod (1 - q_0j)) <= 1.
class CorrelatedParams {
 public:
  // q_j = 1 makes every moment infinite and is rejected unless
  // `allow_unit_q` is set.
  CorrelatedParams(std::vector<double> q, std::vector<double> q0, double omega, bool allow_unit_q = false);

  std::size_t size() const noexcept { return q_.size(); }
  const std::vector<double>& q() const noexcept { return q_; }
  const std::vector<double>& q0() const noexcept { return q0_; }
  double omega() const noexcept { return omega_; }
  bool unit_q_allowed() const noexcept { return allow_unit_q_; }
  bool has_unit_q() const noexcept;

  /// P(0, ..., 0) = 1 - omega (1 - prod (1 - q_0j)); rounding residue below
  /// a few ulps is reported as exactly 0.
  double vacuum_mass() const noexcept;

 private:
  std::vector<double> q_;
  std::vector<double> q0_;
  double omega_;
  bool allow_unit_q_;
};

double tail_prob_corr(const CorrelatedParams& params, const Occupancy& n);

/// Point mass: prod_{j in I} (1 - q_j) prod_{j not in I} (1 - q_0j) P(n+) with
/// I the occupied states, and vacuum_mass() at n = 0.
double prob_corr(const CorrelatedParams& params, const Occupancy& n);

struct CorrelatedMoments {
  std::vector<double> means;  // omega q_0j / (1 - q_j)
  SquareMatrix pair_means;    // E(n_i n_j); diagonal holds E(n_j^2)
  SquareMatrix covariances;   // off-diagonal (1/omega - 1) E n_i E n_j
};

/// Throws DomainError when some q_j = 1 (infinite means).
CorrelatedMoments moments_corr(const CorrelatedParams& params);

/// Law of the remaining k-1 states given n_j = 0: omega becomes
/// omega (1 - q_0j) / (1 - omega q_0j). Requires omega q_0j < 1 and k >= 2.
CorrelatedParams condition_on_empty_level(const CorrelatedParams& params, std::size_t j);

/// The independent geometric law conditioned on n != 0:
/// (q, q0 = q, omega = 1 / (1 - prod (1 - q_j))).
CorrelatedParams condition_no_vacuum(const QVector& q);

/// Entropy of the marginal of n_j: S_Ber(omega q_0j) + omega q_0j S_Geom(q_j).
double entropy_marginal_corr(const CorrelatedParams& params, std::size_t j);

struct MixingGapOptions {
  // Per-state cutoffs are chosen so each marginal tail P(n_j > M_j) is below this.
  double tail_tolerance = 1e-14;
  EnumerationBudget budget{};
};

/// sum_j S_j - S(joint); the joint entropy comes from truncated enumeration
/// of prob_corr. Zero under independence (omega = 1), positive otherwise.
double mixing_entropy_gap(const CorrelatedParams& params, const MixingGapOptions& options = {});

/// Per-state cutoffs M_j with P(n_j > M_j) = omega q_0j q_j^{M_j} below
/// `tail_tolerance`. Throws DomainError for q_j = 1.
std::vector<Count> correlated_cutoffs(const CorrelatedParams& params, double tail_tolerance);

/// Tail probabilities P(n+) stored on the box [0, grid_max]^k.
class TailTable {
 public:
  TailTable(std::size_t states, Count grid_max);

  const BoxIndexer& box() const noexcept { return box_; }
  Count grid_max() const noexcept { return grid_max_; }
  double at(std::span<const Count> n) const { return values_.at(box_.index(n)); }
  double& at(std::span<const Count> n) { return values_.at(box_.index(n)); }

 private:
  BoxIndexer box_;
  Count grid_max_;
  std::vector<double> values_;
};

TailTable tabulate_tails(const CorrelatedParams& params, Count grid_max,
                         const EnumerationBudget& budget = {});

struct ConsistencyReport {
  double max_violation = 0.0;  // relative
  std::size_t relations_checked = 0;
  Occupancy worst;             // n at the worst relation
  std::size_t worst_state = 0;
};

/// Checks P(n+) = P((n - e_j)+) r on every grid point with n_j >= 1 and
/// n - e_j != 0, where r = q_0j if n_j = 1 and r = q_j if n_j >= 2.
ConsistencyReport consistency_check(const CorrelatedParams& params, const TailTable& table);
ConsistencyReport consistency_check(const CorrelatedParams& params, Count grid_max,
                                    const EnumerationBudget& budget = {});

}  // namespace partstat
