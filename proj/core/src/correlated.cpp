#include "partstat/correlated.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "partstat/error.hpp"
#include "partstat/summation.hpp"
#include "partstat/thermo.hpp"

namespace partstat {
namespace {

constexpr double kRoundingSlack = 8.0 * std::numeric_limits<double>::epsilon();

// 1 - prod (1 - q0_j): probability that at least one state is occupied, up to omega.
double occupied_fraction(const std::vector<double>& q0) {
  double empty = 1.0;
  for (double v : q0) empty *= 1.0 - v;
  return 1.0 - empty;
}

double tail_of(const CorrelatedParams& params, std::span<const Count> n) {
  bool vacuum = true;
  double t = params.omega();
  for (std::size_t j = 0; j < n.size(); ++j) {
    if (n[j] == 0) continue;
    vacuum = false;
    t *= params.q0()[j] * std::pow(params.q()[j], static_cast<double>(n[j]) - 1.0);
  }
  return vacuum ? 1.0 : t;
}

double mass_of(const CorrelatedParams& params, std::span<const Count> n) {
  bool vacuum = true;
  double factor = 1.0;
  for (std::size_t j = 0; j < n.size(); ++j) {
    if (n[j] == 0) {
      factor *= 1.0 - params.q0()[j];
    } else {
      vacuum = false;
      factor *= 1.0 - params.q()[j];
    }
  }
  return vacuum ? params.vacuum_mass() : factor * tail_of(params, n);
}

void require_state(std::size_t j, std::size_t k, const char* where) {
  if (j >= k) {
    std::ostringstream msg;
    msg << where << ": state index " << j << " out of range for k = " << k;
    throw DomainError(msg.str());
  }
}

void require_size(const CorrelatedParams& params, const Occupancy& n, const char* where) {
  if (n.size() != params.size()) {
    std::ostringstream msg;
    msg << where << ": params have " << params.size() << " states, occupancy has " << n.size();
    throw DomainError(msg.str());
  }
}

}  // namespace

CorrelatedParams::CorrelatedParams(std::vector<double> q, std::vector<double> q0, double omega,
                                   bool allow_unit_q)
    : q_(std::move(q)), q0_(std::move(q0)), omega_(omega), allow_unit_q_(allow_unit_q) {
  if (q_.empty()) throw DomainError("CorrelatedParams: need at least one state");
  if (q_.size() != q0_.size()) {
    throw DomainError("CorrelatedParams: q has " + std::to_string(q_.size()) + " entries, q0 has " +
                      std::to_string(q0_.size()));
  }
  for (std::size_t j = 0; j < q_.size(); ++j) {
    std::ostringstream msg;
    if (!(q_[j] > 0.0 && q_[j] <= 1.0)) {
      msg << "CorrelatedParams: q[" << j << "] = " << q_[j] << " outside (0,1]";
      throw DomainError(msg.str());
    }
    if (q_[j] == 1.0 && !allow_unit_q_) {
      msg << "CorrelatedParams: q[" << j << "] = 1 gives infinite means; pass allow_unit_q to accept it";
      throw DomainError(msg.str());
    }
    if (!(q0_[j] > 0.0 && q0_[j] <= 1.0)) {
      msg << "CorrelatedParams: q0[" << j << "] = " << q0_[j] << " outside (0,1]";
      throw DomainError(msg.str());
    }
  }
  if (!(omega_ > 0.0) || !std::isfinite(omega_)) {
    throw DomainError("CorrelatedParams: omega must be positive and finite");
  }
  const bool some_certain = std::any_of(q0_.begin(), q0_.end(), [](double v) { return v == 1.0; });
  if (some_certain && omega_ > 1.0) {
    std::ostringstream msg;
    msg << "CorrelatedParams: omega = " << omega_ << " > 1 while some q0 = 1; feasibility "
        << "omega * (1 - prod(1 - q0)) <= 1 then requires omega <= 1";
    throw DomainError(msg.str());
  }
  const double occupied = occupied_fraction(q0_);
  if (omega_ * occupied > 1.0 + kRoundingSlack) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "CorrelatedParams: infeasible, omega * (1 - prod(1 - q0)) = " << omega_ * occupied
        << " > 1; omega must be <= " << 1.0 / occupied;
    throw DomainError(msg.str());
  }
}

bool CorrelatedParams::has_unit_q() const noexcept {
  return std::any_of(q_.begin(), q_.end(), [](double v) { return v == 1.0; });
}

double CorrelatedParams::vacuum_mass() const noexcept {
  const double v = 1.0 - omega_ * occupied_fraction(q0_);
  return std::fabs(v) <= kRoundingSlack ? 0.0 : v;
}

double tail_prob_corr(const CorrelatedParams& params, const Occupancy& n) {
  require_size(params, n, "tail_prob_corr");
  return tail_of(params, n.counts());
}

double prob_corr(const CorrelatedParams& params, const Occupancy& n) {
  require_size(params, n, "prob_corr");
  return mass_of(params, n.counts());
}

CorrelatedMoments moments_corr(const CorrelatedParams& params) {
  if (params.has_unit_q()) throw DomainError("moments_corr: some q_j = 1, means are infinite");
  const std::size_t k = params.size();
  const double omega = params.omega();
  CorrelatedMoments m{std::vector<double>(k), SquareMatrix(k), SquareMatrix(k)};
  for (std::size_t j = 0; j < k; ++j) {
    m.means[j] = omega * params.q0()[j] / (1.0 - params.q()[j]);
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) {
        // n_j = 1 + Geom(q_j) on the event n_j >= 1, which has mass omega q0_j.
        const double q = params.q()[j];
        m.pair_means(j, j) = omega * params.q0()[j] * (1.0 + q) / ((1.0 - q) * (1.0 - q));
        m.covariances(j, j) = m.pair_means(j, j) - m.means[j] * m.means[j];
      } else {
        m.pair_means(i, j) = m.means[i] * m.means[j] / omega;
        m.covariances(i, j) = (1.0 / omega - 1.0) * m.means[i] * m.means[j];
      }
    }
  }
  return m;
}

CorrelatedParams condition_on_empty_level(const CorrelatedParams& params, std::size_t j) {
  require_state(j, params.size(), "condition_on_empty_level");
  if (params.size() < 2) throw DomainError("condition_on_empty_level: no states would remain");
  const double p_occupied = params.omega() * params.q0()[j];
  if (!(p_occupied < 1.0)) {
    std::ostringstream msg;
    msg << "condition_on_empty_level: P(n_" << j << " = 0) = 1 - omega q0 = " << 1.0 - p_occupied
        << ", cannot condition on a null event";
    throw DomainError(msg.str());
  }
  std::vector<double> q;
  std::vector<double> q0;
  for (std::size_t m = 0; m < params.size(); ++m) {
    if (m == j) continue;
    q.push_back(params.q()[m]);
    q0.push_back(params.q0()[m]);
  }
  const double omega = params.omega() * (1.0 - params.q0()[j]) / (1.0 - p_occupied);
  return CorrelatedParams(std::move(q), std::move(q0), omega, params.unit_q_allowed());
}

CorrelatedParams condition_no_vacuum(const QVector& q) {
  if (!q.in_unit_interval()) throw DomainError("condition_no_vacuum: needs every q in (0,1)");
  std::vector<double> values(q.values().begin(), q.values().end());
  const double omega = 1.0 / occupied_fraction(values);
  return CorrelatedParams(values, values, omega);
}

double entropy_marginal_corr(const CorrelatedParams& params, std::size_t j) {
  require_state(j, params.size(), "entropy_marginal_corr");
  double a = params.omega() * params.q0()[j];
  if (a > 1.0 + kRoundingSlack) {
    std::ostringstream msg;
    msg << "entropy_marginal_corr: omega q0 = " << a << " > 1 is not a probability";
    throw DomainError(msg.str());
  }
  a = std::min(a, 1.0);
  const double q = params.q()[j];
  if (q >= 1.0) throw DomainError("entropy_marginal_corr: q_j = 1 gives infinite entropy");
  return entropy_bernoulli(a) + a * entropy_geometric(q);
}

std::vector<Count> correlated_cutoffs(const CorrelatedParams& params, double tail_tolerance) {
  if (!(tail_tolerance > 0.0 && tail_tolerance < 1.0)) {
    throw DomainError("correlated_cutoffs: tolerance must lie in (0,1)");
  }
  std::vector<Count> cutoffs(params.size());
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double q = params.q()[j];
    if (q >= 1.0) throw DomainError("correlated_cutoffs: q_j = 1 has no finite truncation");
    const double a = params.omega() * params.q0()[j];
    // smallest M >= 1 with a q^M < tol
    double m = std::ceil(std::log(tail_tolerance / a) / std::log(q));
    if (!(m >= 1.0)) m = 1.0;
    if (a * std::pow(q, m) >= tail_tolerance) m += 1.0;
    if (m > 1e7) throw BudgetError("correlated_cutoffs: cutoff above 1e7 for q = " + std::to_string(q));
    cutoffs[j] = static_cast<Count>(m);
  }
  return cutoffs;
}

double mixing_entropy_gap(const CorrelatedParams& params, const MixingGapOptions& options) {
  const BoxIndexer box(correlated_cutoffs(params, options.tail_tolerance));
  if (box.cell_count() > options.budget.max_terms) {
    throw BudgetError("mixing_entropy_gap: " + std::to_string(box.cell_count()) +
                      " cells exceed the budget " + std::to_string(options.budget.max_terms));
  }
  CompensatedSum joint;
  box.for_each([&](std::uint64_t, std::span<const Count> n) {
    const double p = mass_of(params, n);
    if (p > 0.0) joint += -p * std::log(p);
  });
  CompensatedSum marginals;
  for (std::size_t j = 0; j < params.size(); ++j) marginals += entropy_marginal_corr(params, j);
  return marginals.value() - joint.value();
}

TailTable::TailTable(std::size_t states, Count grid_max)
    : box_(std::vector<Count>(states, grid_max)), grid_max_(grid_max), values_(box_.cell_count(), 0.0) {}

TailTable tabulate_tails(const CorrelatedParams& params, Count grid_max, const EnumerationBudget& budget) {
  const BoxIndexer probe(std::vector<Count>(params.size(), grid_max));
  if (probe.cell_count() > budget.max_terms) {
    throw BudgetError("tabulate_tails: " + std::to_string(probe.cell_count()) + " cells exceed the budget " +
                      std::to_string(budget.max_terms));
  }
  TailTable table(params.size(), grid_max);
  table.box().for_each([&](std::uint64_t, std::span<const Count> n) { table.at(n) = tail_of(params, n); });
  return table;
}

ConsistencyReport consistency_check(const CorrelatedParams& params, const TailTable& table) {
  if (table.box().dims() != params.size()) {
    throw DomainError("consistency_check: table dimension does not match the parameters");
  }
  ConsistencyReport report;
  report.worst = Occupancy::zeros(params.size());
  std::vector<Count> prev(params.size());
  table.box().for_each([&](std::uint64_t, std::span<const Count> n) {
    std::uint64_t total = 0;
    for (Count c : n) total += c;
    if (total < 2) return;  // the relation is stated for non-vacuum predecessors
    for (std::size_t j = 0; j < n.size(); ++j) {
      if (n[j] == 0) continue;
      std::copy(n.begin(), n.end(), prev.begin());
      --prev[j];
      const double ratio = n[j] == 1 ? params.q0()[j] : params.q()[j];
      const double lhs = table.at(n);
      const double rhs = table.at(prev) * ratio;
      const double scale = std::max({std::fabs(lhs), std::fabs(rhs), std::numeric_limits<double>::min()});
      const double violation = std::fabs(lhs - rhs) / scale;
      ++report.relations_checked;
      if (violation > report.max_violation) {
        report.max_violation = violation;
        report.worst = Occupancy(std::vector<Count>(n.begin(), n.end()));
        report.worst_state = j;
      }
    }
  });
  return report;
}

ConsistencyReport consistency_check(const CorrelatedParams& params, Count grid_max,
                                    const EnumerationBudget& budget) {
  return consistency_check(params, tabulate_tails(params, grid_max, budget));
}

}  // namespace partstat
