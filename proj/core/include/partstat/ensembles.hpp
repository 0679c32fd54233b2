#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "partstat/combinatorics.hpp"
#include "partstat/types.hpp"

namespace partstat {

/// Which product occupancy law: unbounded geometric (Bose-Einstein),
/// Bernoulli (Fermi-Dirac), or geometric truncated at K (Gentile).
class EnsembleKind {
 public:
  enum class Tag { BoseEinstein, FermiDirac, Gentile };

  static EnsembleKind bose_einstein() noexcept { return EnsembleKind(Tag::BoseEinstein, 0); }
  static EnsembleKind fermi_dirac() noexcept { return EnsembleKind(Tag::FermiDirac, 1); }
  static EnsembleKind gentile(Count max_occupancy);

  Tag tag() const noexcept { return tag_; }
  // Largest admissible occupation per state; nullopt for Bose-Einstein.
  std::optional<Count> max_occupancy() const noexcept;
  // Bose-Einstein needs every q in (0,1); the capped laws accept any q > 0.
  bool needs_unit_interval() const noexcept { return tag_ == Tag::BoseEinstein; }
  std::string name() const;

  friend bool operator==(const EnsembleKind&, const EnsembleKind&) = default;

 private:
  EnsembleKind(Tag tag, Count cap) noexcept : tag_(tag), cap_(cap) {}
  Tag tag_;
  Count cap_;
};

/// P(n) under the product law of `kind`:
///   BE        prod q_j^{n_j} (1 - q_j)
///   FD        prod q_j^{n_j} / (1 + q_j),                 n_j in {0,1}
///   Gentile   prod q_j^{n_j} (1 - q_j) / (1 - q_j^{K+1}), n_j <= K
double joint_prob(const EnsembleKind& kind, const QVector& q, const Occupancy& n);

/// P(m_j >= n_j for all j) under the same law.
double tail_prob(const EnsembleKind& kind, const QVector& q, const Occupancy& n);

/// Expected occupation of one state with ratio q: the Bose-Einstein,
/// Fermi-Dirac and Gentile mean-occupancy laws.
double mean_occupancy(const EnsembleKind& kind, double q);

/// Boltzmann probabilities of a single particle over the levels,
/// Z^-1 exp(-beta (eps_j - (nu, u_j))). Without nu the charges are ignored.
std::vector<double> canonical_single_particle(double beta, const LevelSystem& levels,
                                              const std::optional<std::vector<double>>& nu = std::nullopt);

struct SpinConfiguration {
  std::string label;
  double energy;
  double magnetization;
};

/// Configurations of a magnetic system in an external field H.
class SpinConfigurationTable {
 public:
  SpinConfigurationTable(std::vector<SpinConfiguration> configurations, double field);

  /// All 2^L configurations of a periodic Ising ring with
  /// E = -coupling * sum s_l s_{l+1} and M = sum s_l. Labels are strings of
  /// '+' and '-'. L must be in [1, 20].
  static SpinConfigurationTable ising_ring(std::size_t sites, double coupling, double field);

  std::span<const SpinConfiguration> configurations() const noexcept { return configurations_; }
  std::size_t size() const noexcept { return configurations_.size(); }
  double field() const noexcept { return field_; }

 private:
  std::vector<SpinConfiguration> configurations_;
  double field_;
};

/// P(config) = Z^-1 exp(-beta (E - H M)), in table order.
std::vector<double> magnetic_canonical(const SpinConfigurationTable& table, double beta);

/// Z_gc(N) = sum over n with n_1 + ... + n_k = N of prod q_j^{n_j}, by exact
/// enumeration of compositions (compensated, lexicographic order).
double zgc_direct(const QVector& q, Count total, const EnumerationBudget& budget = {});

struct ClosedFormOptions {
  // Smallest |q_i - q_j| the closed forms accept.
  double min_gap = 1e-6;
};

/// Z_gc(N) = sum_j q_j^{N+k-1} prod_{m != j} (q_j - q_m)^-1. Throws
/// IllConditionedError when two ratios are closer than `min_gap`.
double zgc_closed(const QVector& q, Count total, const ClosedFormOptions& options = {});

/// Smallest pairwise distance between ratios; +inf for k = 1.
double min_pairwise_gap(const QVector& q) noexcept;

/// P(n | n_1 + ... + n_k = N). Throws DomainError unless sum n_j == N.
double conditional_prob_given_N(const QVector& q, const Occupancy& n, Count total,
                                const EnumerationBudget& budget = {});

struct ConditionalMean {
  double value = 0.0;                 // enumerated when available, else closed form
  std::optional<double> closed_form;  // absent when refused (k = 1 or ill-conditioned)
  std::optional<double> enumerated;   // absent when over budget
  bool closed_form_refused = false;

  // |closed - enumerated| / |enumerated|; nullopt unless both routes ran.
  std::optional<double> relative_gap() const;
};

struct ConditionalMeanOptions {
  EnumerationBudget budget{};
  ClosedFormOptions closed{};
};

/// E(n_i | n_1 + ... + n_k = N) by both the closed form in distinct q and by
/// enumeration. Throws BudgetError when neither route is available.
ConditionalMean conditional_mean_given_N(const QVector& q, std::size_t state, Count total,
                                         const ConditionalMeanOptions& options = {});

/// Every E(n_j | N) from a single enumeration pass.
std::vector<double> conditional_means_by_enumeration(const QVector& q, Count total,
                                                     const EnumerationBudget& budget = {});

/// lim_{N->inf} E(n_other | N) = q_other / (q_ground - q_other). Requires
/// q_ground to be the unique maximum.
double condensation_limit(const QVector& q, std::size_t ground, std::size_t other);

struct CondensationRow {
  Count total;
  std::vector<double> means;  // E(n_j | N) per state
  double ground_fraction;     // E(n_ground | N) / N; NaN at N = 0
};

/// Finite-N conditional means on a grid of totals, by enumeration.
std::vector<CondensationRow> condensation_sweep(const QVector& q, std::size_t ground,
                                                std::span<const Count> totals,
                                                const EnumerationBudget& budget = {});

/// First-order expansion of P0 prod (p + delta_j)^{n_j} in the deltas:
/// P0 p^N (1 + (1/p) sum delta_j n_j).
double bilinear_approx(double p, std::span<const double> deltas, const Occupancy& n, double p0);

/// Multinomial mass N! prod p_j^{n_j} / n_j!. Throws BudgetError when
/// N > max_total.
double johnson_prob(std::span<const double> p, const Occupancy& n, std::uint64_t max_total = 170);

}  // namespace partstat
