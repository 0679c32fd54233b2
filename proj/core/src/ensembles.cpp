#include "partstat/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "partstat/error.hpp"
#include "partstat/summation.hpp"

namespace partstat {
namespace {

#ifdef PARTSTAT_INJECT_FAULT
constexpr double kFaultScale = 1.0 + 1e-6;
#else
constexpr double kFaultScale = 1.0;
#endif

void require_same_size(const QVector& q, const Occupancy& n, const char* where) {
  if (q.size() != n.size()) {
    std::ostringstream msg;
    msg << where << ": q has " << q.size() << " states, occupancy has " << n.size();
    throw DomainError(msg.str());
  }
}

void require_admissible(const EnsembleKind& kind, const QVector& q, const char* where) {
  if (kind.needs_unit_interval() && !q.in_unit_interval()) {
    throw DomainError(std::string(where) + ": " + kind.name() + " needs every q in (0,1)");
  }
}

void require_within_cap(const EnsembleKind& kind, const Occupancy& n, const char* where) {
  const auto cap = kind.max_occupancy();
  if (!cap) return;
  for (std::size_t j = 0; j < n.size(); ++j) {
    if (n[j] > *cap) {
      std::ostringstream msg;
      msg << where << ": n[" << j << "] = " << n[j] << " exceeds the " << kind.name() << " cap " << *cap;
      throw DomainError(msg.str());
    }
  }
}

// (1 - q) / (1 - q^{K+1}), the normalizer of the geometric law truncated at K.
double truncated_normalizer(double q, Count cap) {
  if (q == 1.0) return 1.0 / (static_cast<double>(cap) + 1.0);
  return (1.0 - q) / -std::expm1((static_cast<double>(cap) + 1.0) * std::log(q));
}

// Mean of P(n) proportional to e^{-a n} on {0, ..., K}, a > 0:
// 1/(e^a - 1) - (K+1)/(e^{(K+1)a} - 1). Both terms are ~1/a when (K+1)a is
// small, so there the difference is taken term by term in the Bernoulli
// expansion 1/(e^y - 1) = 1/y - 1/2 + sum_n B_2n y^{2n-1} / (2n)!.
double capped_geometric_mean(double a, double K) {
  const double x = (K + 1.0) * a;
  if (x >= 0.5) return 1.0 / std::expm1(a) - (K + 1.0) / std::expm1(x);
  static constexpr double kCoef[] = {1.0 / 12,         -1.0 / 720,
                                     1.0 / 30240,      -1.0 / 1209600,
                                     1.0 / 47900160,   -691.0 / 1307674368000.0,
                                     1.0 / 74724249600};
  const double k1sq = (K + 1.0) * (K + 1.0);
  double sum = K / 2.0;
  double a_pow = a;      // a^{2n-1}
  double k_pow = k1sq;   // (K+1)^{2n}
  for (double c : kCoef) {
    sum += c * a_pow * (1.0 - k_pow);
    a_pow *= a * a;
    k_pow *= k1sq;
  }
  return sum;
}

void require_state(std::size_t j, std::size_t k, const char* where) {
  if (j >= k) {
    std::ostringstream msg;
    msg << where << ": state index " << j << " out of range for k = " << k;
    throw DomainError(msg.str());
  }
}

}  // namespace

EnsembleKind EnsembleKind::gentile(Count max_occupancy) {
  if (max_occupancy == 0) throw DomainError("EnsembleKind: Gentile cap K must be >= 1");
  return EnsembleKind(Tag::Gentile, max_occupancy);
}

std::optional<Count> EnsembleKind::max_occupancy() const noexcept {
  if (tag_ == Tag::BoseEinstein) return std::nullopt;
  return cap_;
}

std::string EnsembleKind::name() const {
  switch (tag_) {
    case Tag::BoseEinstein: return "Bose-Einstein";
    case Tag::FermiDirac: return "Fermi-Dirac";
    case Tag::Gentile: return "Gentile(" + std::to_string(cap_) + ")";
  }
  return "?";
}

double joint_prob(const EnsembleKind& kind, const QVector& q, const Occupancy& n) {
  require_same_size(q, n, "joint_prob");
  require_admissible(kind, q, "joint_prob");
  require_within_cap(kind, n, "joint_prob");
  double p = 1.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double qn = std::pow(q[j], static_cast<double>(n[j]));
    switch (kind.tag()) {
      case EnsembleKind::Tag::BoseEinstein: p *= qn * (1.0 - q[j]); break;
      case EnsembleKind::Tag::FermiDirac: p *= qn / (1.0 + q[j]); break;
      case EnsembleKind::Tag::Gentile: p *= qn * truncated_normalizer(q[j], *kind.max_occupancy()); break;
    }
  }
  return p;
}

double tail_prob(const EnsembleKind& kind, const QVector& q, const Occupancy& n) {
  require_same_size(q, n, "tail_prob");
  require_admissible(kind, q, "tail_prob");
  require_within_cap(kind, n, "tail_prob");
  double p = 1.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double nj = static_cast<double>(n[j]);
    switch (kind.tag()) {
      case EnsembleKind::Tag::BoseEinstein: p *= std::pow(q[j], nj); break;
      case EnsembleKind::Tag::FermiDirac:
        if (n[j] == 1) p *= q[j] / (1.0 + q[j]);
        break;
      case EnsembleKind::Tag::Gentile: {
        const double cap1 = static_cast<double>(*kind.max_occupancy()) + 1.0;
        if (q[j] == 1.0) {
          p *= (cap1 - nj) / cap1;
        } else {
          // sum_{m=n}^{K} q^m (1-q)/(1-q^{K+1}) = q^n (1 - q^{K+1-n}) / (1 - q^{K+1}),
          // through expm1 so q near 1 does not cancel.
          const double s = std::log(q[j]);
          p *= std::pow(q[j], nj) * (std::expm1((cap1 - nj) * s) / std::expm1(cap1 * s));
        }
        break;
      }
    }
  }
  return p;
}

double mean_occupancy(const EnsembleKind& kind, double q) {
  if (!(q > 0.0) || !std::isfinite(q)) {
    std::ostringstream msg;
    msg << "mean_occupancy: q = " << q << " must be positive and finite";
    throw DomainError(msg.str());
  }
  switch (kind.tag()) {
    case EnsembleKind::Tag::BoseEinstein:
      if (q >= 1.0) {
        std::ostringstream msg;
        msg << "mean_occupancy: Bose-Einstein needs q < 1, got " << q;
        throw DomainError(msg.str());
      }
      return q / (1.0 - q);
    case EnsembleKind::Tag::FermiDirac: return q / (1.0 + q);
    case EnsembleKind::Tag::Gentile: {
      const Count cap = *kind.max_occupancy();
      const double K = static_cast<double>(cap);
      if (q == 1.0) return K / 2.0;
      // n -> K - n maps ratio q to 1/q; keeps q^{K+1} from overflowing.
      const double a = std::fabs(std::log(q));
      return q < 1.0 ? capped_geometric_mean(a, K) : K - capped_geometric_mean(a, K);
    }
  }
  return 0.0;
}

std::vector<double> canonical_single_particle(double beta, const LevelSystem& levels,
                                              const std::optional<std::vector<double>>& nu) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw DomainError("canonical_single_particle: beta must be positive and finite");
  }
  if (nu) {
    if (!levels.has_charges() || levels.charge_dim() != nu->size()) {
      throw DomainError("canonical_single_particle: nu dimension does not match the level charges");
    }
  }
  const std::size_t k = levels.size();
  std::vector<double> exponent(k);
  for (std::size_t j = 0; j < k; ++j) {
    double coupling = 0.0;
    if (nu) {
      const auto u = levels.charge(j);
      for (std::size_t l = 0; l < u.size(); ++l) coupling += (*nu)[l] * u[l];
    }
    exponent[j] = -beta * (levels.energy(j) - coupling);
  }
  const double shift = *std::max_element(exponent.begin(), exponent.end());
  CompensatedSum z;
  for (double& x : exponent) {
    x = std::exp(x - shift);
    z += x;
  }
  const double total = z.value();
  for (double& x : exponent) x /= total;
  return exponent;
}

SpinConfigurationTable::SpinConfigurationTable(std::vector<SpinConfiguration> configurations, double field)
    : configurations_(std::move(configurations)), field_(field) {
  if (configurations_.empty()) {
    throw DomainError("SpinConfigurationTable: need at least one configuration");
  }
  if (!std::isfinite(field_)) throw DomainError("SpinConfigurationTable: field must be finite");
  std::set<std::string> seen;
  for (const auto& c : configurations_) {
    if (!seen.insert(c.label).second) {
      throw DomainError("SpinConfigurationTable: duplicate label '" + c.label + "'");
    }
    if (!std::isfinite(c.energy) || !std::isfinite(c.magnetization)) {
      throw DomainError("SpinConfigurationTable: configuration '" + c.label + "' is not finite");
    }
  }
}

SpinConfigurationTable SpinConfigurationTable::ising_ring(std::size_t sites, double coupling, double field) {
  if (sites == 0 || sites > 20) throw DomainError("ising_ring: sites must be in [1, 20]");
  std::vector<SpinConfiguration> configs;
  configs.reserve(std::size_t{1} << sites);
  for (std::uint32_t mask = 0; mask < (1u << sites); ++mask) {
    auto spin = [&](std::size_t l) { return (mask >> l) & 1u ? -1.0 : 1.0; };
    std::string label;
    double energy = 0.0;
    double magnetization = 0.0;
    for (std::size_t l = 0; l < sites; ++l) {
      label += spin(l) > 0 ? '+' : '-';
      magnetization += spin(l);
      if (sites > 1) energy -= coupling * spin(l) * spin((l + 1) % sites);
    }
    configs.push_back({std::move(label), energy, magnetization});
  }
  return SpinConfigurationTable(std::move(configs), field);
}

std::vector<double> magnetic_canonical(const SpinConfigurationTable& table, double beta) {
  // The magnetic ensemble is the generalized canonical one with nu = H and
  // one charge per configuration, its magnetization.
  std::vector<double> energies;
  std::vector<std::vector<double>> charges;
  for (const auto& c : table.configurations()) {
    energies.push_back(c.energy);
    charges.push_back({c.magnetization});
  }
  return canonical_single_particle(beta, LevelSystem(std::move(energies), std::move(charges)),
                                   std::vector<double>{table.field()});
}

double zgc_direct(const QVector& q, Count total, const EnumerationBudget& budget) {
  const std::size_t k = q.size();
  std::vector<std::vector<double>> powers(k, std::vector<double>(std::size_t{total} + 1));
  for (std::size_t j = 0; j < k; ++j) {
    for (Count m = 0; m <= total; ++m) powers[j][m] = std::pow(q[j], static_cast<double>(m));
  }
  CompensatedSum z;
  for_each_composition(total, k, budget, [&](std::span<const Count> n) {
    double w = 1.0;
    for (std::size_t j = 0; j < k; ++j) w *= powers[j][n[j]];
    z += w;
  });
  return z.value();
}

double min_pairwise_gap(const QVector& q) noexcept {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (std::size_t j = i + 1; j < q.size(); ++j) gap = std::min(gap, std::fabs(q[i] - q[j]));
  }
  return gap;
}

namespace {
void require_separated(const QVector& q, const ClosedFormOptions& options, const char* where) {
  const double gap = min_pairwise_gap(q);
  if (gap < options.min_gap) {
    std::ostringstream msg;
    msg << where << ": ratios differ by only " << gap << " (threshold " << options.min_gap
        << "); closed form is ill-conditioned, use enumeration";
    throw IllConditionedError(msg.str());
  }
}
}  // namespace

double zgc_closed(const QVector& q, Count total, const ClosedFormOptions& options) {
  require_separated(q, options, "zgc_closed");
  const std::size_t k = q.size();
  const double exponent = static_cast<double>(total) + static_cast<double>(k) - 1.0;
  CompensatedSum z;
  for (std::size_t j = 0; j < k; ++j) {
    double denom = 1.0;
    for (std::size_t m = 0; m < k; ++m) {
      if (m != j) denom *= q[j] - q[m];
    }
    z += std::pow(q[j], exponent) / denom;
  }
  return z.value() * kFaultScale;
}

double conditional_prob_given_N(const QVector& q, const Occupancy& n, Count total,
                                const EnumerationBudget& budget) {
  require_same_size(q, n, "conditional_prob_given_N");
  if (n.total() != total) {
    std::ostringstream msg;
    msg << "conditional_prob_given_N: occupancy " << n.to_string() << " has " << n.total()
        << " particles, conditioned on N = " << total;
    throw DomainError(msg.str());
  }
  double w = 1.0;
  for (std::size_t j = 0; j < q.size(); ++j) w *= std::pow(q[j], static_cast<double>(n[j]));
  return w / zgc_direct(q, total, budget);
}

std::optional<double> ConditionalMean::relative_gap() const {
  if (!closed_form || !enumerated) return std::nullopt;
  const double scale = std::fabs(*enumerated);
  const double diff = std::fabs(*closed_form - *enumerated);
  return scale > 0.0 ? diff / scale : diff;
}

std::vector<double> conditional_means_by_enumeration(const QVector& q, Count total,
                                                     const EnumerationBudget& budget) {
  const std::size_t k = q.size();
  std::vector<std::vector<double>> powers(k, std::vector<double>(std::size_t{total} + 1));
  for (std::size_t j = 0; j < k; ++j) {
    for (Count m = 0; m <= total; ++m) powers[j][m] = std::pow(q[j], static_cast<double>(m));
  }
  CompensatedSum z;
  std::vector<CompensatedSum> weighted(k);
  for_each_composition(total, k, budget, [&](std::span<const Count> n) {
    double w = 1.0;
    for (std::size_t j = 0; j < k; ++j) w *= powers[j][n[j]];
    z += w;
    for (std::size_t j = 0; j < k; ++j) {
      if (n[j]) weighted[j] += static_cast<double>(n[j]) * w;
    }
  });
  std::vector<double> means(k);
  for (std::size_t j = 0; j < k; ++j) means[j] = weighted[j].value() / z.value();
  return means;
}

ConditionalMean conditional_mean_given_N(const QVector& q, std::size_t state, Count total,
                                         const ConditionalMeanOptions& options) {
  const std::size_t k = q.size();
  require_state(state, k, "conditional_mean_given_N");
  ConditionalMean result;

  try {
    result.enumerated = conditional_means_by_enumeration(q, total, options.budget)[state];
  } catch (const BudgetError&) {
    result.enumerated.reset();
  }

  if (k >= 2 && min_pairwise_gap(q) >= options.closed.min_gap) {
    const double N = static_cast<double>(total);
    const double qi = q[state];
    CompensatedSum sum;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == state) continue;
      const double qj = q[j];
      double denom = (qj - qi) * (qj - qi);
      for (std::size_t m = 0; m < k; ++m) {
        if (m != state && m != j) denom *= qj - q[m];
      }
      const double bracket =
          std::pow(qj, N + 1.0) + N * std::pow(qi, N + 1.0) - (N + 1.0) * std::pow(qi, N) * qj;
      sum += qi * std::pow(qj, static_cast<double>(k) - 2.0) * bracket / denom;
    }
    result.closed_form = sum.value() / zgc_closed(q, total, options.closed);
  } else {
    result.closed_form_refused = true;
  }

  if (result.enumerated) {
    result.value = *result.enumerated;
  } else if (result.closed_form) {
    result.value = *result.closed_form;
  } else {
    throw BudgetError("conditional_mean_given_N: enumeration over budget and closed form refused");
  }
  return result;
}

double condensation_limit(const QVector& q, std::size_t ground, std::size_t other) {
  require_state(ground, q.size(), "condensation_limit");
  require_state(other, q.size(), "condensation_limit");
  if (ground == other) throw DomainError("condensation_limit: ground and other state coincide");
  for (std::size_t m = 0; m < q.size(); ++m) {
    if (m != ground && !(q[ground] > q[m])) {
      std::ostringstream msg;
      msg << "condensation_limit: q[" << ground << "] = " << q[ground] << " is not the unique maximum (q["
          << m << "] = " << q[m] << ")";
      throw DomainError(msg.str());
    }
  }
  return q[other] / (q[ground] - q[other]);
}

std::vector<CondensationRow> condensation_sweep(const QVector& q, std::size_t ground,
                                                std::span<const Count> totals,
                                                const EnumerationBudget& budget) {
  require_state(ground, q.size(), "condensation_sweep");
  for (std::size_t m = 0; m < q.size(); ++m) {
    if (m != ground && !(q[ground] > q[m])) {
      throw DomainError("condensation_sweep: ground state must carry the unique maximal q");
    }
  }
  std::vector<CondensationRow> rows;
  rows.reserve(totals.size());
  for (Count N : totals) {
    CondensationRow row{N, conditional_means_by_enumeration(q, N, budget),
                        std::numeric_limits<double>::quiet_NaN()};
    if (N > 0) row.ground_fraction = row.means[ground] / static_cast<double>(N);
    rows.push_back(std::move(row));
  }
  return rows;
}

double bilinear_approx(double p, std::span<const double> deltas, const Occupancy& n, double p0) {
  if (deltas.size() != n.size()) throw DomainError("bilinear_approx: deltas and occupancy differ in length");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("bilinear_approx: p must lie in (0,1)");
  double linear = 0.0;
  for (std::size_t j = 0; j < deltas.size(); ++j) {
    const double qj = p + deltas[j];
    if (!(qj > 0.0 && qj < 1.0)) {
      std::ostringstream msg;
      msg << "bilinear_approx: q[" << j << "] = p + delta = " << qj << " outside (0,1)";
      throw DomainError(msg.str());
    }
    linear += deltas[j] * static_cast<double>(n[j]);
  }
  return p0 * std::pow(p, static_cast<double>(n.total())) * (1.0 + linear / p);
}

double johnson_prob(std::span<const double> p, const Occupancy& n, std::uint64_t max_total) {
  if (p.size() != n.size()) throw DomainError("johnson_prob: p and occupancy differ in length");
  CompensatedSum norm;
  for (double pj : p) {
    if (!(pj >= 0.0 && pj <= 1.0)) throw DomainError("johnson_prob: probabilities must lie in [0,1]");
    norm += pj;
  }
  if (std::fabs(norm.value() - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "johnson_prob: probabilities sum to " << norm.value() << ", not 1";
    throw DomainError(msg.str());
  }
  if (n.total() > max_total) {
    throw BudgetError("johnson_prob: N = " + std::to_string(n.total()) + " exceeds the factorial budget " +
                      std::to_string(max_total));
  }
  // prod_j C(S_j, n_j) p_j^{n_j} with S_j the running particle count.
  double mass = 1.0;
  double running = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    for (Count t = 1; t <= n[j]; ++t) {
      running += 1.0;
      mass *= running * p[j] / static_cast<double>(t);
    }
  }
  return mass;
}

}  // namespace partstat
