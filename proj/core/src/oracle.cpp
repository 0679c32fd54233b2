#include "partstat/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>

#include "partstat/error.hpp"
#include "partstat/sampling.hpp"
#include "partstat/summation.hpp"
#include "partstat/thermo.hpp"

namespace partstat {
namespace {

constexpr std::uint64_t kMaxSeriesTerms = 100'000'000;

// sum_{m >= 0} q^m by adding terms until they stop mattering.
double geometric_series(double q) {
  CompensatedSum sum;
  double term = 1.0;
  for (std::uint64_t m = 0; m < kMaxSeriesTerms; ++m) {
    sum += term;
    term *= q;
    if (term < 1e-18 * sum.value()) return sum.value();
  }
  throw NumericError("oracle: geometric series did not settle");
}

// Marginal pmf of one state of a product law on {0, ..., cutoff}. Weights come
// from w(m+1) = q w(m); the normalizer is a plain sum of weights.
std::vector<double> product_marginal(const EnsembleKind& kind, double q, Count cutoff) {
  std::vector<double> pmf(static_cast<std::size_t>(cutoff) + 1, 0.0);
  const auto cap = kind.max_occupancy();
  if (!cap) {
    double w = 1.0;
    const double z = geometric_series(q);
    for (auto& p : pmf) {
      p = w / z;
      w *= q;
    }
    return pmf;
  }
  // Capped: build weights from whichever end is largest so nothing overflows.
  std::vector<double> w(static_cast<std::size_t>(*cap) + 1);
  if (q <= 1.0) {
    w[0] = 1.0;
    for (std::size_t m = 1; m < w.size(); ++m) w[m] = w[m - 1] * q;
  } else {
    w.back() = 1.0;
    for (std::size_t m = w.size() - 1; m-- > 0;) w[m] = w[m + 1] / q;
  }
  CompensatedSum z;
  for (double x : w) z += x;
  for (std::size_t m = 0; m < pmf.size() && m < w.size(); ++m) pmf[m] = w[m] / z.value();
  return pmf;
}

// omega prod_{n_j >= 1} q0_j q_j^{n_j - 1}, by repeated multiplication.
double oracle_tail(const CorrelatedParams& params, std::span<const Count> n) {
  bool vacuum = true;
  double t = params.omega();
  for (std::size_t j = 0; j < n.size(); ++j) {
    if (n[j] == 0) continue;
    vacuum = false;
    t *= params.q0()[j];
    for (Count m = 1; m < n[j]; ++m) t *= params.q()[j];
  }
  return vacuum ? 1.0 : t;
}

// P(n) = sum_{S} (-1)^{|S|} P((n + 1_S)+).
double inclusion_exclusion(const CorrelatedParams& params, std::span<const Count> n, std::vector<Count>& scratch) {
  const std::size_t k = n.size();
  CompensatedSum sum;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
    int parity = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const bool in = ((mask >> j) & 1U) != 0;
      scratch[j] = n[j] + (in ? 1U : 0U);
      parity ^= in ? 1 : 0;
    }
    const double t = oracle_tail(params, scratch);
    sum += parity ? -t : t;
  }
  return sum.value();
}

// Smallest M >= 0 with factor * q^M <= tol.
Count geometric_cutoff(double factor, double q, double tol, const char* where) {
  if (factor <= tol) return 0;
  const double guess = std::ceil(std::log(tol / factor) / std::log(q));
  if (!std::isfinite(guess) || guess > 1e7) {
    throw BudgetError(std::string(where) + ": truncation cutoff is unreasonably large");
  }
  auto m = static_cast<Count>(std::max(0.0, guess));
  while (m > 0 && factor * std::pow(q, m - 1) <= tol) --m;
  while (factor * std::pow(q, m) > tol) ++m;
  return m;
}

double law_q(const Law& law, std::size_t j) {
  if (const auto* p = std::get_if<ProductLaw>(&law)) return p->q[j];
  return std::get<CorrelatedParams>(law).q()[j];
}

}  // namespace

std::size_t law_size(const Law& law) {
  return std::visit([](const auto& l) -> std::size_t {
    if constexpr (std::is_same_v<std::decay_t<decltype(l)>, ProductLaw>) {
      return l.q.size();
    } else {
      return l.size();
    }
  }, law);
}

TruncationSpec::TruncationSpec(std::vector<Count> cutoffs, std::vector<double> marginal_tails,
                               double certified_tail_bound)
    : cutoffs_(std::move(cutoffs)), marginal_tails_(std::move(marginal_tails)), tail_(certified_tail_bound) {
  if (cutoffs_.size() != marginal_tails_.size()) {
    throw DomainError("TruncationSpec: cutoffs and marginal tails differ in length");
  }
  if (!(tail_ >= 0.0 && tail_ <= 1.0)) throw DomainError("TruncationSpec: tail bound must lie in [0,1]");
}

TruncationSpec TruncationSpec::for_law(const Law& law, double tolerance) {
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw DomainError("TruncationSpec: tolerance must lie in (0,1)");
  const std::size_t k = law_size(law);
  const double per_state = tolerance / (2.0 * static_cast<double>(k));
  std::vector<Count> cutoffs(k);
  std::vector<double> tails(k, 0.0);

  if (const auto* p = std::get_if<ProductLaw>(&law)) {
    if (const auto cap = p->kind.max_occupancy()) {
      std::fill(cutoffs.begin(), cutoffs.end(), *cap);
      return TruncationSpec(std::move(cutoffs), std::move(tails), 0.0);
    }
    if (!p->q.in_unit_interval()) throw DomainError("TruncationSpec: Bose-Einstein needs every q in (0,1)");
    double log_inside = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      // P(n_j > M) = q^{M+1}
      const Count m = geometric_cutoff(p->q[j], p->q[j], per_state, "TruncationSpec");
      cutoffs[j] = m;
      tails[j] = std::pow(p->q[j], static_cast<double>(m) + 1.0);
      log_inside += std::log1p(-tails[j]);
    }
    return TruncationSpec(std::move(cutoffs), std::move(tails), -std::expm1(log_inside));
  }

  const auto& c = std::get<CorrelatedParams>(law);
  if (c.has_unit_q()) throw DomainError("TruncationSpec: q_j = 1 has no finite truncation");
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    // P(n_j > M) = omega q0_j q_j^M
    const double lead = c.omega() * c.q0()[j];
    const Count m = geometric_cutoff(lead, c.q()[j], per_state, "TruncationSpec");
    cutoffs[j] = m;
    tails[j] = lead * std::pow(c.q()[j], static_cast<double>(m));
    total += tails[j];
  }
  return TruncationSpec(std::move(cutoffs), std::move(tails), std::min(1.0, total));
}

MassTable::MassTable(BoxIndexer box, std::vector<double> masses, double certified_tail)
    : box_(std::move(box)), masses_(std::move(masses)), tail_(certified_tail) {
  if (masses_.size() != box_.cell_count()) throw DomainError("MassTable: mass count does not match the box");
  CompensatedSum sum;
  for (double p : masses_) sum += p;
  total_ = sum.value();
}

MassTable enumerate_masses(const Law& law, const TruncationSpec& trunc, const EnumerationBudget& budget) {
  const std::size_t k = law_size(law);
  if (trunc.cutoffs().size() != k) throw DomainError("enumerate_masses: truncation does not match the law");
  BoxIndexer box(std::vector<Count>(trunc.cutoffs().begin(), trunc.cutoffs().end()));
  const bool correlated = std::holds_alternative<CorrelatedParams>(law);
  const std::uint64_t per_cell = correlated && k < 64 ? (std::uint64_t{1} << k) : 1;
  const std::uint64_t cells = box.cell_count();
  if (cells > budget.max_terms || (correlated && k >= 64) || cells > budget.max_terms / per_cell) {
    std::ostringstream msg;
    msg << "enumerate_masses: " << cells << " cells x " << per_cell << " terms exceed the budget " << budget.max_terms;
    throw BudgetError(msg.str());
  }
  std::vector<double> masses(cells);

  if (const auto* p = std::get_if<ProductLaw>(&law)) {
    if (p->kind.needs_unit_interval() && !p->q.in_unit_interval()) {
      throw DomainError("enumerate_masses: Bose-Einstein needs every q in (0,1)");
    }
    std::vector<std::vector<double>> marginals;
    for (std::size_t j = 0; j < k; ++j) marginals.push_back(product_marginal(p->kind, p->q[j], trunc.cutoffs()[j]));
    box.for_each([&](std::uint64_t idx, std::span<const Count> n) {
      double m = 1.0;
      for (std::size_t j = 0; j < k; ++j) m *= marginals[j][n[j]];
      masses[idx] = m;
    });
  } else {
    const auto& c = std::get<CorrelatedParams>(law);
    std::vector<Count> scratch(k);
    box.for_each([&](std::uint64_t idx, std::span<const Count> n) { masses[idx] = inclusion_exclusion(c, n, scratch); });
  }
  return MassTable(std::move(box), std::move(masses), trunc.certified_tail_bound());
}

OracleEstimate oracle_mean(const Law& law, const TruncationSpec& trunc, std::size_t j, const EnumerationBudget& budget) {
  const std::size_t k = law_size(law);
  if (j >= k) throw DomainError("oracle_mean: state index out of range");
  const MassTable table = enumerate_masses(law, trunc, budget);
  CompensatedSum sum;
  table.box().for_each([&](std::uint64_t idx, std::span<const Count> n) { sum += n[j] * table.masses()[idx]; });

  // E n_j 1{n_j > M_j} = t_j (M_j + 1 + q/(1-q)) for a geometric tail; cells
  // where another coordinate overflows contribute at most M_j t_i.
  const auto tails = trunc.marginal_tails();
  const double mj = trunc.cutoffs()[j];
  double bound = 0.0;
  if (tails[j] > 0.0) {
    const double q = law_q(law, j);
    bound += tails[j] * (mj + 1.0 + q / (1.0 - q));
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (i != j) bound += mj * tails[i];
  }
  return {sum.value(), bound};
}

OracleMoments oracle_moments(const MassTable& table) {
  const std::size_t k = table.box().dims();
  std::vector<CompensatedSum> first(k);
  std::vector<CompensatedSum> second(k * k);
  table.box().for_each([&](std::uint64_t idx, std::span<const Count> n) {
    const double p = table.masses()[idx];
    for (std::size_t i = 0; i < k; ++i) {
      if (n[i] == 0) continue;
      first[i] += n[i] * p;
      for (std::size_t j = 0; j < k; ++j) second[i * k + j] += static_cast<double>(n[i]) * n[j] * p;
    }
  });
  OracleMoments out{std::vector<double>(k), SquareMatrix(k), SquareMatrix(k)};
  for (std::size_t i = 0; i < k; ++i) out.means[i] = first[i].value();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      out.second(i, j) = second[i * k + j].value();
      out.covariances(i, j) = out.second(i, j) - out.means[i] * out.means[j];
    }
  }
  return out;
}

double oracle_entropy(const MassTable& table) {
  CompensatedSum sum;
  for (double p : table.masses()) {
    if (p > 0.0) sum += -p * std::log(p);
  }
  return sum.value();
}

OracleEstimate oracle_marginal_entropy(const Law& law, std::size_t j, double tail_tolerance) {
  if (j >= law_size(law)) throw DomainError("oracle_marginal_entropy: state index out of range");
  if (!(tail_tolerance > 0.0 && tail_tolerance < 1.0)) {
    throw DomainError("oracle_marginal_entropy: tolerance must lie in (0,1)");
  }
  std::vector<double> pmf;
  double next = 0.0;  // p_{M+1}; the remainder beyond is geometric with ratio q
  double q = 0.0;

  if (const auto* p = std::get_if<ProductLaw>(&law)) {
    q = p->q[j];
    if (const auto cap = p->kind.max_occupancy()) {
      pmf = product_marginal(p->kind, q, *cap);
    } else {
      if (!(q > 0.0 && q < 1.0)) throw DomainError("oracle_marginal_entropy: Bose-Einstein needs q in (0,1)");
      const Count m = geometric_cutoff(q, q, tail_tolerance, "oracle_marginal_entropy");
      pmf = product_marginal(p->kind, q, m + 1);
      next = pmf.back();
      pmf.pop_back();
    }
  } else {
    const auto& c = std::get<CorrelatedParams>(law);
    if (c.has_unit_q()) throw DomainError("oracle_marginal_entropy: q_j = 1 has infinite entropy");
    q = c.q()[j];
    const double lead = c.omega() * c.q0()[j];
    const Count m = geometric_cutoff(lead, q, tail_tolerance, "oracle_marginal_entropy");
    // P(n_j = m) = T(m e_j) - T((m+1) e_j) with T the tail function.
    std::vector<Count> n(c.size(), 0);
    auto tail_at = [&](Count v) {
      n[j] = v;
      return oracle_tail(c, n);
    };
    for (Count v = 0; v <= m + 1; ++v) pmf.push_back(tail_at(v) - tail_at(v + 1));
    next = pmf.back();
    pmf.pop_back();
  }

  CompensatedSum sum;
  for (double p : pmf) {
    if (p > 0.0) sum += -p * std::log(p);
  }
  // Beyond M, p_{M+1+r} = p_{M+1} q^r:
  //   -sum p ln p = P_tail (-ln p_{M+1}) + (-ln q) p_{M+1} q / (1-q)^2.
  double bound = 0.0;
  if (next > 0.0) {
    const double p_tail = next / (1.0 - q);
    bound = p_tail * -std::log(next) + -std::log(q) * next * q / ((1.0 - q) * (1.0 - q));
  }
  return {sum.value(), bound};
}

std::size_t VerificationReport::count(CheckStatus status) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [&](const VerificationCheck& c) { return c.status == status; }));
}

std::string to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::Passed: return "passed";
    case CheckStatus::Failed: return "failed";
    case CheckStatus::Skipped: return "skipped";
  }
  return "unknown";
}

std::string to_string(ToleranceKind kind) {
  switch (kind) {
    case ToleranceKind::Absolute: return "absolute";
    case ToleranceKind::Relative: return "relative";
    case ToleranceKind::AtLeast: return "at_least";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Verification suite

namespace {

// Accumulates comparisons for one check and keeps the worst point.
class CheckRun {
 public:
  CheckRun(ToleranceKind kind, double tolerance) : kind_(kind), tol_(tolerance) {}

  // `allowance` is a certified truncation error subtracted before judging.
  void compare(double target, double oracle, double allowance = 0.0) {
    const double diff = std::fabs(target - oracle);
    double net = std::max(0.0, diff - allowance);
    bool ok = false;
    double score = 0.0;
    switch (kind_) {
      case ToleranceKind::Absolute:
        ok = net <= tol_;
        score = net - tol_;
        break;
      case ToleranceKind::Relative: {
        const double rel = oracle != 0.0 ? net / std::fabs(oracle) : net;
        ok = rel <= tol_;
        score = rel - tol_;
        break;
      }
      case ToleranceKind::AtLeast:
        ok = target >= oracle - tol_;
        net = std::max(0.0, oracle - target);
        score = oracle - target;
        break;
    }
    if (std::isnan(target) || std::isnan(oracle)) {
      ok = false;
      score = std::numeric_limits<double>::infinity();
    }
    failed_ = failed_ || !ok;
    ++points_;
    if (points_ == 1 || score > score_) {
      score_ = score;
      target_ = target;
      oracle_ = oracle;
      abs_ = net;
      rel_ = oracle != 0.0 ? net / std::fabs(oracle) : net;
    }
  }

  void expect(bool condition) { compare(condition ? 1.0 : 0.0, 1.0); }
  void work(std::uint64_t n) { work_ += n; }

  void fill(VerificationCheck& out) const {
    out.target = target_;
    out.oracle = oracle_;
    out.abs_discrepancy = abs_;
    out.rel_discrepancy = rel_;
    out.status = (points_ > 0 && !failed_) ? CheckStatus::Passed : CheckStatus::Failed;
    out.budget_used = work_;
  }

  std::uint64_t points() const noexcept { return points_; }

 private:
  ToleranceKind kind_;
  double tol_;
  bool failed_ = false;
  std::uint64_t points_ = 0;
  double score_ = 0.0;
  double target_ = 0.0;
  double oracle_ = 0.0;
  double abs_ = 0.0;
  double rel_ = 0.0;
  std::uint64_t work_ = 0;
};

struct Entry {
  std::string name;
  std::string description;
  ToleranceKind kind;
  double tolerance;
  std::uint64_t cost;  // planned work, compared against the suite budget
  std::function<void(CheckRun&)> body;
};

struct CorrelatedCase {
  std::string label;
  CorrelatedParams params;
};

std::vector<CorrelatedCase> correlated_cases() {
  return {
      {"no-vacuum k=2", CorrelatedParams({0.5, 0.5}, {0.5, 0.5}, 4.0 / 3.0)},
      {"omega=0.8 k=3", CorrelatedParams({0.6, 0.4, 0.3}, {0.5, 0.7, 0.2}, 0.8)},
      {"omega=1 k=3", CorrelatedParams({0.5, 0.3, 0.2}, {0.4, 0.6, 0.3}, 1.0)},
      {"omega=4/3 k=3", CorrelatedParams({0.5, 0.4, 0.3}, {0.3, 0.2, 0.25}, 4.0 / 3.0)},
      {"omega=1.5 k=2", CorrelatedParams({0.7, 0.4}, {0.3, 0.2}, 1.5)},
  };
}

// Pinned well-separated ratio sets, three per k.
std::vector<QVector> partition_q_sets() {
  return {
      QVector::bose({0.5, 0.25}),           QVector::bose({0.9, 0.3}),
      QVector::bose({0.7, 0.6}),            QVector::bose({0.5, 0.3, 0.2}),
      QVector::bose({0.9, 0.6, 0.3}),       QVector::bose({0.8, 0.5, 0.1}),
      QVector::bose({0.5, 0.4, 0.3, 0.2}),  QVector::bose({0.9, 0.7, 0.5, 0.3}),
      QVector::bose({0.8, 0.6, 0.35, 0.1}),
  };
}

constexpr Count kPartitionMaxN = 20;

// Weights prod q_j^{n_j} by repeated multiplication.
double product_weight(const QVector& q, std::span<const Count> n) {
  double w = 1.0;
  for (std::size_t j = 0; j < n.size(); ++j) {
    for (Count m = 0; m < n[j]; ++m) w *= q[j];
  }
  return w;
}

struct EnumeratedPartition {
  double z;
  std::vector<double> means;
};

EnumeratedPartition enumerate_partition(const QVector& q, Count total, CheckRun& run) {
  const std::size_t k = q.size();
  CompensatedSum z;
  std::vector<CompensatedSum> first(k);
  for_each_composition(total, k, {}, [&](std::span<const Count> n) {
    const double w = product_weight(q, n);
    z += w;
    for (std::size_t j = 0; j < k; ++j) first[j] += n[j] * w;
  });
  run.work(composition_count(total, k));
  EnumeratedPartition out{z.value(), std::vector<double>(k)};
  for (std::size_t j = 0; j < k; ++j) out.means[j] = first[j].value() / out.z;
  return out;
}

std::vector<double> direct_boltzmann(std::span<const double> exponents) {
  const double top = *std::max_element(exponents.begin(), exponents.end());
  std::vector<double> w(exponents.size());
  CompensatedSum z;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(exponents[i] - top);
    z += w[i];
  }
  for (double& x : w) x /= z.value();
  return w;
}

std::uint64_t box_cost(const Law& law, double tol) {
  const auto trunc = TruncationSpec::for_law(law, tol);
  std::uint64_t cells = BoxIndexer(std::vector<Count>(trunc.cutoffs().begin(), trunc.cutoffs().end())).cell_count();
  if (std::holds_alternative<CorrelatedParams>(law)) cells <<= law_size(law);
  return cells;
}

// ---- core ------------------------------------------------------------------

void add_core_checks(std::vector<Entry>& out) {
  out.push_back({"core.q_round_trip", "q -> mean -> q and mean -> q -> mean on q in {0.01, ..., 0.99}",
                 ToleranceKind::Relative, 1e-12, 198, [](CheckRun& run) {
                   for (int i = 1; i <= 99; ++i) {
                     const double q = i / 100.0;
                     run.compare(q_from_mean(mean_from_q(q)), q);
                     const double mean = i / 10.0;
                     run.compare(mean_from_q(q_from_mean(mean)), mean);
                   }
                   run.work(198);
                 }});

  out.push_back({"core.mean_series", "q/(1-q) against the summed series sum n q^n (1-q)", ToleranceKind::Relative,
                 1e-12, 5'000, [](CheckRun& run) {
                   for (double q : {0.1, 0.25, 0.5, 0.75, 0.9}) {
                     CompensatedSum s;
                     double w = 1.0 - q;
                     for (int n = 0; n < 1000; ++n) {
                       s += n * w;
                       w *= q;
                     }
                     run.compare(mean_from_q(q), s.value());
                     run.work(1000);
                   }
                 }});

  out.push_back({"core.generalized_reduction", "e^{beta((nu,u)-eps)} with nu=(mu), u=(1) against e^{beta(mu-eps)}",
                 ToleranceKind::Relative, 1e-15, 75, [](CheckRun& run) {
                   for (double beta : {0.5, 1.0, 2.0}) {
                     for (double mu : {-1.0, -0.3, 0.0, 0.4, 1.2}) {
                       for (double eps : {0.0, 0.25, 0.7, 1.0, 3.0}) {
                         const double u[] = {1.0};
                         const auto plain = q_thermo(ThermoParams(beta, mu), eps);
                         const auto gen = q_thermo_generalized(ThermoParams(beta, mu, {mu}), eps, u);
                         run.compare(gen.q, plain.q);
                         run.work(1);
                       }
                     }
                   }
                 }});

  out.push_back({"core.stationarity",
                 "central difference (h=1e-5) of the grand potential at q = e^{beta(mu-eps)}, 5x5 (mu,eps) grid, "
                 "beta in {0.5,1,2}",
                 ToleranceKind::Absolute, 1e-6, 150, [](CheckRun& run) {
                   constexpr double h = 1e-5;
                   for (double beta : {0.5, 1.0, 2.0}) {
                     for (double mu : {-1.0, -0.75, -0.5, -0.25, 0.0}) {
                       for (double eps : {0.25, 0.5, 0.75, 1.0, 1.25}) {
                         const ThermoParams params(beta, mu);
                         const double q = q_thermo(params, eps).q;
                         const double d =
                             (grand_potential(q + h, params, eps) - grand_potential(q - h, params, eps)) / (2 * h);
                         run.compare(d, 0.0);
                         run.work(2);
                       }
                     }
                   }
                 }});

  out.push_back({"core.stationarity_generalized",
                 "central difference of the generalized grand potential at q = e^{beta((nu,u)-eps)}",
                 ToleranceKind::Absolute, 1e-6, 50, [](CheckRun& run) {
                   constexpr double h = 1e-5;
                   const std::vector<double> nu = {0.3, -0.2};
                   const std::vector<std::vector<double>> charges = {{1.0, 2.0}, {0.5, 0.0}, {-1.0, 1.0}};
                   for (double beta : {0.5, 1.0, 2.0}) {
                     for (const auto& u : charges) {
                       for (double eps : {0.75, 1.25, 2.0}) {
                         const ThermoParams params(beta, 0.0, nu);
                         const double q = q_thermo_generalized(params, eps, u).q;
                         const std::span<const double> us(u);
                         const double d =
                             (grand_potential(q + h, params, eps, us) - grand_potential(q - h, params, eps, us)) /
                             (2 * h);
                         run.compare(d, 0.0);
                         run.work(2);
                       }
                     }
                   }
                 }});

  out.push_back({"core.entropy_series", "geometric entropy against -sum p ln p with certified remainder",
                 ToleranceKind::Absolute, 1e-10, 5'000, [](CheckRun& run) {
                   for (int i = 1; i <= 9; ++i) {
                     const double q = i / 10.0;
                     const Law law = ProductLaw{EnsembleKind::bose_einstein(), QVector::bose({q})};
                     const auto est = oracle_marginal_entropy(law, 0);
                     run.compare(entropy_geometric(q), est.value, est.error_bound);
                     run.work(400);
                   }
                 }});

  out.push_back({"core.entropy_bernoulli", "binary entropy against the two-point -sum p ln p",
                 ToleranceKind::Absolute, 1e-15, 21, [](CheckRun& run) {
                   for (int i = 1; i < 20; ++i) {
                     const double a = i / 20.0;
                     run.compare(entropy_bernoulli(a), -a * std::log(a) - (1 - a) * std::log(1 - a));
                   }
                   run.compare(entropy_bernoulli(0.0), 0.0);
                   run.compare(entropy_bernoulli(1.0), 0.0);
                   run.work(21);
                 }});
}

// ---- ensembles -------------------------------------------------------------

struct ProductCase {
  std::string label;
  ProductLaw law;
};

std::vector<ProductCase> product_cases() {
  return {
      {"BE", {EnsembleKind::bose_einstein(), QVector::bose({0.5, 0.3, 0.2})}},
      {"FD", {EnsembleKind::fermi_dirac(), QVector::positive({1.0, 3.0, 0.4})}},
      {"Gentile(3)", {EnsembleKind::gentile(3), QVector::positive({0.9, 1.5, 0.5})}},
      {"Gentile(2) q=1", {EnsembleKind::gentile(2), QVector::positive({1.0, 0.5})}},
  };
}

void ratio_sweep(CheckRun& run, bool tails) {
  const auto kind = EnsembleKind::bose_einstein();
  const auto q = QVector::bose({0.5, 0.3, 0.2});
  BoxIndexer({5, 5, 5}).for_each([&](std::uint64_t, std::span<const Count> cell) {
    const Occupancy n(std::vector<Count>(cell.begin(), cell.end()));
    for (std::size_t j = 0; j < 3; ++j) {
      const double ratio = tails ? tail_prob(kind, q, n.plus(j)) / tail_prob(kind, q, n)
                                 : joint_prob(kind, q, n.plus(j)) / joint_prob(kind, q, n);
      run.compare(ratio, q[j]);
    }
    run.work(3);
  });
}

void add_ensemble_checks(std::vector<Entry>& out) {
  out.push_back({"ensembles.be_ratio", "BE joint_prob(n+e_j)/joint_prob(n) = q_j on [0,5]^3, q=(0.5,0.3,0.2)",
                 ToleranceKind::Relative, 1e-12, 648, [](CheckRun& run) { ratio_sweep(run, false); }});
  out.push_back({"ensembles.be_tail_ratio", "BE tail_prob(n+e_j)/tail_prob(n) = q_j on [0,5]^3",
                 ToleranceKind::Relative, 1e-12, 648, [](CheckRun& run) { ratio_sweep(run, true); }});

  out.push_back({"ensembles.joint_vs_oracle", "joint_prob against recursion-built masses (BE, FD, Gentile)",
                 ToleranceKind::Relative, 1e-12, 200'000, [](CheckRun& run) {
                   for (const auto& c : product_cases()) {
                     const Law law = c.law;
                     const auto table = enumerate_masses(law, TruncationSpec::for_law(law));
                     table.box().for_each([&](std::uint64_t idx, std::span<const Count> n) {
                       const Occupancy occ(std::vector<Count>(n.begin(), n.end()));
                       run.compare(joint_prob(c.law.kind, c.law.q, occ), table.masses()[idx]);
                     });
                     run.work(table.masses().size());
                   }
                 }});

  out.push_back({"ensembles.normalization", "sum of joint_prob over the box plus certified tail equals 1",
                 ToleranceKind::Absolute, 1e-9, 200'000, [](CheckRun& run) {
                   for (const auto& c : product_cases()) {
                     const Law law = c.law;
                     const auto trunc = TruncationSpec::for_law(law);
                     CompensatedSum s;
                     BoxIndexer box(std::vector<Count>(trunc.cutoffs().begin(), trunc.cutoffs().end()));
                     box.for_each([&](std::uint64_t, std::span<const Count> n) {
                       s += joint_prob(c.law.kind, c.law.q, Occupancy(std::vector<Count>(n.begin(), n.end())));
                     });
                     run.compare(s.value(), 1.0, trunc.certified_tail_bound());
                     run.work(box.cell_count());
                   }
                 }});

  out.push_back({"ensembles.tail_vs_oracle", "tail_prob against summed oracle masses above n",
                 ToleranceKind::Absolute, 1e-12, 2'000'000, [](CheckRun& run) {
                   for (const auto& c : product_cases()) {
                     const Law law = c.law;
                     const auto table = enumerate_masses(law, TruncationSpec::for_law(law));
                     const auto& box = table.box();
                     const std::size_t k = box.dims();
                     // Only probe a small corner; the sum above each probe walks the whole box.
                     std::vector<Count> probe_max(k);
                     for (std::size_t j = 0; j < k; ++j) probe_max[j] = std::min<Count>(box.cutoffs()[j], 3);
                     BoxIndexer(probe_max).for_each([&](std::uint64_t, std::span<const Count> n) {
                       CompensatedSum s;
                       box.for_each([&](std::uint64_t idx, std::span<const Count> m) {
                         for (std::size_t j = 0; j < k; ++j) {
                           if (m[j] < n[j]) return;
                         }
                         s += table.masses()[idx];
                       });
                       const Occupancy occ(std::vector<Count>(n.begin(), n.end()));
                       run.compare(tail_prob(c.law.kind, c.law.q, occ), s.value(), table.certified_tail());
                       run.work(box.cell_count());
                     });
                   }
                 }});

  out.push_back({"ensembles.mean_vs_oracle", "mean occupancy laws against enumerated means",
                 ToleranceKind::Relative, 1e-10, 100'000, [](CheckRun& run) {
                   const std::vector<std::pair<EnsembleKind, std::vector<double>>> grid = {
                       {EnsembleKind::bose_einstein(), {0.1, 0.25, 0.5, 0.75, 0.9, 0.99}},
                       {EnsembleKind::fermi_dirac(), {0.1, 0.5, 1.0, 2.0, 10.0}},
                       {EnsembleKind::gentile(2), {0.1, 0.5, 1.0, 1.5, 4.0}},
                       {EnsembleKind::gentile(3), {0.3, 0.9, 1.0, 1.1}},
                       {EnsembleKind::gentile(10), {0.5, 0.95, 1.0, 1.05, 3.0}},
                       {EnsembleKind::gentile(200), {0.5, 0.9, 0.999, 1.0, 1.001}},
                   };
                   for (const auto& [kind, qs] : grid) {
                     for (double q : qs) {
                       const Law law = ProductLaw{kind, QVector(std::vector<double>{q}, kind.needs_unit_interval()
                                                                                           ? QRegime::UnitInterval
                                                                                           : QRegime::Positive)};
                       const auto trunc = TruncationSpec::for_law(law);
                       const auto est = oracle_mean(law, trunc, 0);
                       run.compare(mean_occupancy(kind, q), est.value, est.error_bound);
                       run.work(trunc.cutoffs()[0] + 1);
                     }
                   }
                 }});

  out.push_back({"ensembles.gentile_fd", "Gentile(1) mean equals FD mean on q in {0.1, ..., 0.9}",
                 ToleranceKind::Absolute, 1e-14, 9, [](CheckRun& run) {
                   for (int i = 1; i <= 9; ++i) {
                     const double q = i / 10.0;
                     run.compare(mean_occupancy(EnsembleKind::gentile(1), q),
                                 mean_occupancy(EnsembleKind::fermi_dirac(), q));
                   }
                   run.work(9);
                 }});

  out.push_back({"ensembles.gentile_large_k", "Gentile(400) mean within 1e-10 of BE mean on q in {0.1, ..., 0.9}",
                 ToleranceKind::Absolute, 1e-10, 9, [](CheckRun& run) {
                   for (int i = 1; i <= 9; ++i) {
                     const double q = i / 10.0;
                     run.compare(mean_occupancy(EnsembleKind::gentile(400), q),
                                 mean_occupancy(EnsembleKind::bose_einstein(), q));
                   }
                   run.work(9);
                 }});

  out.push_back({"ensembles.gentile_sandwich", "FD <= Gentile(K) <= Gentile(K+1) <= BE for K = 1..60",
                 ToleranceKind::AtLeast, 0.0, 600, [](CheckRun& run) {
                   for (double q : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99}) {
                     const double be = mean_occupancy(EnsembleKind::bose_einstein(), q);
                     double prev = mean_occupancy(EnsembleKind::fermi_dirac(), q);
                     for (Count k = 1; k <= 60; ++k) {
                       const double g = mean_occupancy(EnsembleKind::gentile(k), q);
                       // Allow a few ulps where consecutive values coincide in double.
                       const double slack = 4 * std::numeric_limits<double>::epsilon() * be;
                       run.compare(g - prev, -slack);
                       run.compare(be - g, -slack);
                       prev = g;
                     }
                     run.work(60);
                   }
                 }});

  out.push_back({"ensembles.zgc_closed_vs_direct",
                 "closed-form Z_gc(N) against enumeration, k in {2,3,4}, N in [0,20], three q sets each",
                 ToleranceKind::Relative, 1e-9, 40'000, [](CheckRun& run) {
                   for (const auto& q : partition_q_sets()) {
                     for (Count n = 0; n <= kPartitionMaxN; ++n) {
                       const auto e = enumerate_partition(q, n, run);
                       run.compare(zgc_closed(q, n), e.z);
                       run.compare(zgc_direct(q, n), e.z);
                     }
                   }
                 }});

  out.push_back({"ensembles.conditional_mean_closed_vs_enum",
                 "closed-form E(n_i | N) against enumeration on the partition grid", ToleranceKind::Relative, 1e-8,
                 40'000, [](CheckRun& run) {
                   ConditionalMeanOptions no_enum;
                   no_enum.budget.max_terms = 0;
                   for (const auto& q : partition_q_sets()) {
                     for (Count n = 0; n <= kPartitionMaxN; ++n) {
                       const auto e = enumerate_partition(q, n, run);
                       for (std::size_t i = 0; i < q.size(); ++i) {
                         const auto closed = conditional_mean_given_N(q, i, n, no_enum);
                         run.compare(closed.closed_form.value_or(std::nan("")), e.means[i]);
                       }
                     }
                   }
                 }});

  out.push_back({"ensembles.conditional_mean_conservation", "sum_i E(n_i | N) = N for the closed form",
                 ToleranceKind::Absolute, 1e-10, 1'000, [](CheckRun& run) {
                   ConditionalMeanOptions no_enum;
                   no_enum.budget.max_terms = 0;
                   for (const auto& q : partition_q_sets()) {
                     for (Count n = 0; n <= kPartitionMaxN; ++n) {
                       CompensatedSum s;
                       for (std::size_t i = 0; i < q.size(); ++i) {
                         s += conditional_mean_given_N(q, i, n, no_enum).closed_form.value_or(std::nan(""));
                       }
                       run.compare(s.value(), n);
                       run.work(q.size());
                     }
                   }
                 }});

  out.push_back({"ensembles.conditional_prob_normalization", "P(n | N) sums to 1 over the compositions of N",
                 ToleranceKind::Absolute, 1e-12, 20'000, [](CheckRun& run) {
                   for (const auto& q : {QVector::bose({0.5, 0.25}), QVector::bose({0.5, 0.3, 0.2}),
                                         QVector::bose({0.4, 0.4, 0.4})}) {
                     for (Count n : {0U, 1U, 5U, 12U}) {
                       CompensatedSum s;
                       for_each_composition(n, q.size(), {}, [&](std::span<const Count> c) {
                         s += conditional_prob_given_N(q, Occupancy(std::vector<Count>(c.begin(), c.end())), n);
                       });
                       run.compare(s.value(), 1.0);
                       run.work(composition_count(n, q.size()) * composition_count(n, q.size()));
                     }
                   }
                 }});

  out.push_back({"ensembles.condensation_n60", "E(n_2 | N=60) within 0.01 of the limit q_2/(q_1-q_2), q=(1/2,1/4)",
                 ToleranceKind::Absolute, 0.01, 61, [](CheckRun& run) {
                   const auto q = QVector::bose({0.5, 0.25});
                   const auto e = enumerate_partition(q, 60, run);
                   run.compare(e.means[1], condensation_limit(q, 0, 1));
                   run.compare(conditional_mean_given_N(q, 1, 60).value, e.means[1]);
                 }});

  out.push_back({"ensembles.condensation_ground_fraction", "E(n_1 | N=60)/60 >= 0.97, q=(1/2,1/4)",
                 ToleranceKind::AtLeast, 0.0, 61, [](CheckRun& run) {
                   const auto q = QVector::bose({0.5, 0.25});
                   const Count totals[] = {60};
                   const auto rows = condensation_sweep(q, 0, totals);
                   run.compare(rows.front().ground_fraction, 0.97);
                   run.work(61);
                 }});

  out.push_back({"ensembles.condensation_sweep",
                 "q=(0.6,0.3,0.1): E(n_j | N=80) within 0.01 of q_j/(q_1-q_j); ground fraction >= 0.97",
                 ToleranceKind::Absolute, 0.01, 10'000, [](CheckRun& run) {
                   const auto q = QVector::bose({0.6, 0.3, 0.1});
                   const Count totals[] = {10, 20, 40, 80};
                   const auto rows = condensation_sweep(q, 0, totals);
                   const auto& last = rows.back();
                   for (std::size_t j = 1; j < 3; ++j) run.compare(last.means[j], condensation_limit(q, 0, j));
                   run.expect(last.ground_fraction >= 0.97);
                   // The ground fraction approaches 1 along the grid.
                   for (std::size_t r = 1; r < rows.size(); ++r) {
                     run.expect(rows[r].ground_fraction >= rows[r - 1].ground_fraction);
                   }
                   for (const auto& row : rows) run.work(composition_count(row.total, 3));
                 }});

  out.push_back({"ensembles.conditioning_given_sum",
                 "BE k=3 given n_3 = n_1 + n_2: ratios q_1 q_3 and q_2 q_3 on [0,5]^2", ToleranceKind::Relative,
                 1e-12, 200, [](CheckRun& run) {
                   const auto kind = EnsembleKind::bose_einstein();
                   const auto q = QVector::bose({0.5, 0.3, 0.2});
                   constexpr Count kMax = 6;
                   auto mass = [&](Count a, Count b) { return joint_prob(kind, q, Occupancy({a, b, a + b})); };
                   CompensatedSum z;
                   for (Count a = 0; a <= kMax; ++a) {
                     for (Count b = 0; b <= kMax; ++b) z += mass(a, b);
                   }
                   for (Count a = 0; a < kMax; ++a) {
                     for (Count b = 0; b < kMax; ++b) {
                       const double here = mass(a, b) / z.value();
                       run.compare((mass(a + 1, b) / z.value()) / here, q[0] * q[2]);
                       run.compare((mass(a, b + 1) / z.value()) / here, q[1] * q[2]);
                       run.work(3);
                     }
                   }
                 }});

  out.push_back({"ensembles.conditioning_given_equal", "BE k=3 given n_1 = n_2: law of the common value has ratio q_1 q_2",
                 ToleranceKind::Relative, 1e-12, 2'000, [](CheckRun& run) {
                   const auto kind = EnsembleKind::bose_einstein();
                   const auto q = QVector::bose({0.5, 0.3, 0.2});
                   const auto trunc = TruncationSpec::for_law(Law{ProductLaw{kind, q}});
                   const Count m3 = trunc.cutoffs()[2];
                   auto weight = [&](Count m) {
                     CompensatedSum s;
                     for (Count n3 = 0; n3 <= m3; ++n3) s += joint_prob(kind, q, Occupancy({m, m, n3}));
                     return s.value();
                   };
                   for (Count m = 0; m < 6; ++m) {
                     run.compare(weight(m + 1) / weight(m), q[0] * q[1]);
                     run.work(2 * (m3 + 1));
                   }
                 }});

  out.push_back({"ensembles.canonical_one_particle",
                 "single-particle canonical law against direct Boltzmann weights (plain and generalized)",
                 ToleranceKind::Absolute, 1e-14, 100, [](CheckRun& run) {
                   const std::vector<double> eps = {0.0, 0.3, 1.1, 2.5};
                   const std::vector<std::vector<double>> u = {{1.0}, {0.0}, {-1.0}, {2.0}};
                   for (double beta : {0.3, 1.0, 4.0}) {
                     std::vector<double> ex(eps.size());
                     for (std::size_t j = 0; j < eps.size(); ++j) ex[j] = -beta * eps[j];
                     const auto plain = canonical_single_particle(beta, LevelSystem(eps));
                     const auto direct = direct_boltzmann(ex);
                     for (std::size_t j = 0; j < eps.size(); ++j) run.compare(plain[j], direct[j]);

                     const double nu = 0.7;
                     for (std::size_t j = 0; j < eps.size(); ++j) ex[j] = -beta * (eps[j] - nu * u[j][0]);
                     const auto gen = canonical_single_particle(beta, LevelSystem(eps, u), std::vector<double>{nu});
                     const auto gen_direct = direct_boltzmann(ex);
                     for (std::size_t j = 0; j < eps.size(); ++j) run.compare(gen[j], gen_direct[j]);

                     // One particle in the grand-canonical law: P(e_j | N=1) is the same law.
                     std::vector<double> qs(eps.size());
                     for (std::size_t j = 0; j < eps.size(); ++j) qs[j] = std::exp(beta * (-3.0 - eps[j]));
                     const auto q = QVector::bose(qs);
                     for (std::size_t j = 0; j < eps.size(); ++j) {
                       std::vector<Count> n(eps.size(), 0);
                       n[j] = 1;
                       run.compare(conditional_prob_given_N(q, Occupancy(n), 1), plain[j]);
                     }
                     run.work(3 * eps.size());
                   }
                 }});

  out.push_back({"ensembles.canonical_shift_invariance", "canonical law unchanged under eps_j -> eps_j + c",
                 ToleranceKind::Absolute, 1e-12, 30, [](CheckRun& run) {
                   const std::vector<double> eps = {-0.5, 0.0, 0.8, 1.9, 3.3};
                   for (double beta : {0.5, 2.0}) {
                     const auto base = canonical_single_particle(beta, LevelSystem(eps));
                     for (double c : {-5.0, 3.7, 100.0}) {
                       auto shifted = eps;
                       for (double& e : shifted) e += c;
                       const auto p = canonical_single_particle(beta, LevelSystem(shifted));
                       for (std::size_t j = 0; j < eps.size(); ++j) run.compare(p[j], base[j]);
                       run.work(eps.size());
                     }
                   }
                 }});

  out.push_back({"ensembles.magnetic", "magnetic canonical law against direct weights, H=0 reduction, logistic case",
                 ToleranceKind::Absolute, 1e-14, 2'000, [](CheckRun& run) {
                   const double beta = 0.9;
                   const auto ring = SpinConfigurationTable::ising_ring(8, 0.7, 0.3);
                   std::vector<double> ex;
                   for (const auto& c : ring.configurations()) ex.push_back(-beta * (c.energy - 0.3 * c.magnetization));
                   const auto p = magnetic_canonical(ring, beta);
                   const auto direct = direct_boltzmann(ex);
                   for (std::size_t i = 0; i < p.size(); ++i) run.compare(p[i], direct[i]);

                   const auto zero = SpinConfigurationTable::ising_ring(6, 0.7, 0.0);
                   std::vector<double> energies;
                   for (const auto& c : zero.configurations()) energies.push_back(c.energy);
                   const auto p0 = magnetic_canonical(zero, beta);
                   const auto canon = canonical_single_particle(beta, LevelSystem(energies));
                   for (std::size_t i = 0; i < p0.size(); ++i) run.compare(p0[i], canon[i]);

                   const SpinConfigurationTable site({{"+", 0.0, 1.0}, {"-", 0.0, -1.0}}, 1.0);
                   const auto ps = magnetic_canonical(site, 1.0);
                   run.compare(ps[0], 1.0 / (1.0 + std::exp(-2.0)));
                   run.compare(ps[1], 1.0 / (1.0 + std::exp(2.0)));
                   run.work(p.size() + p0.size() + 2);
                 }});

  out.push_back({"ensembles.johnson_normalization", "multinomial masses sum to 1 over compositions, p=(0.2,0.3,0.5)",
                 ToleranceKind::Absolute, 1e-12, 200, [](CheckRun& run) {
                   const double p[] = {0.2, 0.3, 0.5};
                   for (Count n = 0; n <= 8; ++n) {
                     CompensatedSum s;
                     for_each_composition(n, 3, {}, [&](std::span<const Count> c) {
                       s += johnson_prob(p, Occupancy(std::vector<Count>(c.begin(), c.end())));
                     });
                     run.compare(s.value(), 1.0);
                     run.work(composition_count(n, 3));
                   }
                 }});

  out.push_back({"ensembles.bilinear_second_order", "halving the deltas divides the bilinear error by about 4",
                 ToleranceKind::Absolute, 0.5, 10, [](CheckRun& run) {
                   const std::vector<std::pair<std::vector<double>, std::vector<Count>>> cases = {
                       {{0.01, -0.02}, {2, 3}},
                       {{0.02, -0.01, 0.005}, {2, 3, 1}},
                   };
                   for (const auto& [deltas, counts] : cases) {
                     auto error = [&](double scale) {
                       std::vector<double> d = deltas;
                       double exact = 1.0;
                       for (std::size_t j = 0; j < d.size(); ++j) {
                         d[j] *= scale;
                         for (Count m = 0; m < counts[j]; ++m) exact *= 0.5 + d[j];
                       }
                       return std::fabs(bilinear_approx(0.5, d, Occupancy(counts), 1.0) - exact);
                     };
                     run.compare(error(1.0) / error(0.5), 4.0);
                     run.work(2);
                   }
                 }});
}

// ---- correlated ------------------------------------------------------------

constexpr double kCorrelatedTail = 1e-12;
constexpr double kMomentTail = 1e-14;

std::uint64_t correlated_cost(double tol) {
  std::uint64_t total = 0;
  for (const auto& c : correlated_cases()) total += box_cost(Law{c.params}, tol);
  return total;
}

void add_correlated_checks(std::vector<Entry>& out) {
  out.push_back({"correlated.prob_vs_oracle", "prob_corr against inclusion-exclusion over the tail function",
                 ToleranceKind::Absolute, 1e-13, correlated_cost(kCorrelatedTail), [](CheckRun& run) {
                   for (const auto& c : correlated_cases()) {
                     const Law law = c.params;
                     const auto table = enumerate_masses(law, TruncationSpec::for_law(law, kCorrelatedTail));
                     table.box().for_each([&](std::uint64_t idx, std::span<const Count> n) {
                       run.compare(prob_corr(c.params, Occupancy(std::vector<Count>(n.begin(), n.end()))),
                                   table.masses()[idx]);
                     });
                     run.work(table.masses().size() << c.params.size());
                   }
                 }});

  out.push_back({"correlated.normalization", "prob_corr sums to 1 within the certified tail bound",
                 ToleranceKind::Absolute, 1e-10, correlated_cost(kCorrelatedTail) / 4, [](CheckRun& run) {
                   for (const auto& c : correlated_cases()) {
                     const auto trunc = TruncationSpec::for_law(Law{c.params}, kCorrelatedTail);
                     BoxIndexer box(std::vector<Count>(trunc.cutoffs().begin(), trunc.cutoffs().end()));
                     CompensatedSum s;
                     box.for_each([&](std::uint64_t, std::span<const Count> n) {
                       s += prob_corr(c.params, Occupancy(std::vector<Count>(n.begin(), n.end())));
                     });
                     run.compare(s.value(), 1.0, trunc.certified_tail_bound());
                     run.work(box.cell_count());
                   }
                 }});

  out.push_back({"correlated.moments", "means, E(n_i n_j) and covariances against enumerated moments",
                 ToleranceKind::Absolute, 1e-8, correlated_cost(kMomentTail), [](CheckRun& run) {
                   for (const auto& c : correlated_cases()) {
                     const Law law = c.params;
                     const auto trunc = TruncationSpec::for_law(law, kMomentTail);
                     const auto table = enumerate_masses(law, trunc);
                     const auto oracle = oracle_moments(table);
                     const auto closed = moments_corr(c.params);
                     const std::size_t k = c.params.size();
                     for (std::size_t i = 0; i < k; ++i) {
                       // Bound for the mean from the same geometric tail argument as oracle_mean.
                       double bound = trunc.marginal_tails()[i] *
                                      (trunc.cutoffs()[i] + 1.0 + c.params.q()[i] / (1.0 - c.params.q()[i]));
                       for (std::size_t m = 0; m < k; ++m) {
                         if (m != i) bound += trunc.cutoffs()[i] * trunc.marginal_tails()[m];
                       }
                       run.compare(closed.means[i], oracle.means[i], bound);
                       for (std::size_t j = 0; j < k; ++j) {
                         run.compare(closed.pair_means(i, j), oracle.second(i, j));
                         run.compare(closed.covariances(i, j), oracle.covariances(i, j));
                       }
                     }
                     run.work(table.masses().size() << k);
                   }
                 }});

  out.push_back({"correlated.covariance_sign", "enumerated Cov(n_i,n_j), i != j, has the sign of 1/omega - 1",
                 ToleranceKind::AtLeast, 0.0, correlated_cost(kCorrelatedTail), [](CheckRun& run) {
                   for (const auto& c : correlated_cases()) {
                     const double sign = 1.0 / c.params.omega() - 1.0;
                     if (sign == 0.0) continue;
                     const Law law = c.params;
                     const auto table = enumerate_masses(law, TruncationSpec::for_law(law, kCorrelatedTail));
                     const auto m = oracle_moments(table);
                     for (std::size_t i = 0; i < c.params.size(); ++i) {
                       for (std::size_t j = 0; j < c.params.size(); ++j) {
                         if (i != j) run.compare((sign > 0 ? 1.0 : -1.0) * m.covariances(i, j), 1e-6);
                       }
                     }
                     run.work(table.masses().size() << c.params.size());
                   }
                 }});

  out.push_back({"correlated.entropy_decomposition",
                 "S_Ber(omega q0) + omega q0 S_Geom(q) against the summed marginal entropy", ToleranceKind::Absolute,
                 1e-10, 20'000, [](CheckRun& run) {
                   auto cases = correlated_cases();
                   cases.push_back({"omega q0 = 1", CorrelatedParams({0.5, 0.5}, {1.0, 0.5}, 1.0)});
                   for (const auto& c : cases) {
                     for (std::size_t j = 0; j < c.params.size(); ++j) {
                       const auto est = oracle_marginal_entropy(Law{c.params}, j);
                       run.compare(entropy_marginal_corr(c.params, j), est.value, est.error_bound);
                       run.work(200);
                     }
                   }
                 }});

  out.push_back({"correlated.mixing_gap_independent", "mixing entropy gap vanishes at omega = 1",
                 ToleranceKind::Absolute, 1e-9, 200'000, [](CheckRun& run) {
                   for (const auto& p : {CorrelatedParams({0.5, 0.3, 0.2}, {0.4, 0.6, 0.3}, 1.0),
                                         CorrelatedParams({0.5, 0.5}, {0.5, 0.5}, 1.0),
                                         CorrelatedParams({0.8, 0.2}, {0.3, 0.9}, 1.0)}) {
                     run.compare(mixing_entropy_gap(p), 0.0);
                     run.work(50'000);
                   }
                 }});

  out.push_back({"correlated.mixing_gap_positive", "mixing entropy gap is positive for omega != 1",
                 ToleranceKind::AtLeast, 0.0, 200'000, [](CheckRun& run) {
                   for (const auto& c : correlated_cases()) {
                     if (c.params.omega() == 1.0) continue;
                     // Well above the enumeration's rounding level.
                     run.compare(mixing_entropy_gap(c.params), 1e-6);
                     run.work(50'000);
                   }
                 }});

  out.push_back({"correlated.mixing_gap_oracle", "mixing entropy gap against oracle marginal and joint entropies",
                 ToleranceKind::Absolute, 1e-9, correlated_cost(kMomentTail), [](CheckRun& run) {
                   for (const auto& c : correlated_cases()) {
                     const Law law = c.params;
                     const auto table = enumerate_masses(law, TruncationSpec::for_law(law, kMomentTail));
                     CompensatedSum marginals;
                     double bound = 0.0;
                     for (std::size_t j = 0; j < c.params.size(); ++j) {
                       const auto est = oracle_marginal_entropy(law, j);
                       marginals += est.value;
                       bound += est.error_bound;
                     }
                     run.compare(mixing_entropy_gap(c.params), marginals.value() - oracle_entropy(table), bound);
                     run.work(table.masses().size() << c.params.size());
                   }
                 }});

  out.push_back({"correlated.no_vacuum", "no-vacuum law equals the BE law divided by 1 - prod(1 - q_j) for n != 0",
                 ToleranceKind::Relative, 1e-15, 20'000, [](CheckRun& run) {
                   const auto be = EnsembleKind::bose_einstein();
                   for (const auto& q : {QVector::bose({0.5, 0.5}), QVector::bose({0.5, 0.3, 0.2}),
                                         QVector::bose({0.9, 0.1}), QVector::bose({0.7})}) {
                     const auto params = condition_no_vacuum(q);
                     double empty = 1.0;
                     for (double x : q.values()) empty *= 1.0 - x;
                     BoxIndexer(std::vector<Count>(q.size(), 8)).for_each([&](std::uint64_t, std::span<const Count> c) {
                       const Occupancy n(std::vector<Count>(c.begin(), c.end()));
                       if (n.is_vacuum()) return;
                       run.compare(prob_corr(params, n), joint_prob(be, q, n) / (1.0 - empty));
                     });
                     run.work(BoxIndexer(std::vector<Count>(q.size(), 8)).cell_count());
                   }
                 }});

  out.push_back({"correlated.no_vacuum_mass", "no-vacuum law puts exactly zero mass on the vacuum",
                 ToleranceKind::Absolute, 0.0, 10, [](CheckRun& run) {
                   for (const auto& q : {QVector::bose({0.5, 0.5}), QVector::bose({0.5, 0.3, 0.2}),
                                         QVector::bose({0.9, 0.1}), QVector::bose({0.7}),
                                         QVector::bose({0.1, 0.2, 0.3, 0.4})}) {
                     const auto params = condition_no_vacuum(q);
                     run.compare(params.vacuum_mass(), 0.0);
                     run.compare(prob_corr(params, Occupancy::zeros(q.size())), 0.0);
                     run.work(1);
                   }
                 }});

  out.push_back({"correlated.consistency", "P(n+) = P((n-e_j)+) r on [0,6]^k, r = q0_j at n_j = 1, q_j beyond",
                 ToleranceKind::Absolute, 1e-12, 20'000, [](CheckRun& run) {
                   for (const auto& c : correlated_cases()) {
                     const auto report = consistency_check(c.params, 6);
                     run.compare(report.max_violation, 0.0);
                     run.work(report.relations_checked);
                   }
                 }});

  out.push_back({"correlated.consistency_sensitivity", "a 1e-6 perturbation of one tail is flagged above 1e-7",
                 ToleranceKind::AtLeast, 0.0, 1'000, [](CheckRun& run) {
                   const auto params = correlated_cases().front().params;
                   auto table = tabulate_tails(params, 6);
                   const Count cell[] = {2, 3};
                   table.at(cell) *= 1.0 + 1e-6;
                   run.compare(consistency_check(params, table).max_violation, 1e-7);
                   run.work(table.box().cell_count());
                 }});

  out.push_back({"correlated.empty_level_conditioning",
                 "condition_on_empty_level against enumerated conditional masses", ToleranceKind::Absolute, 1e-12,
                 correlated_cost(kCorrelatedTail), [](CheckRun& run) {
                   for (const auto& c : correlated_cases()) {
                     const std::size_t k = c.params.size();
                     const Law law = c.params;
                     const auto table = enumerate_masses(law, TruncationSpec::for_law(law, kCorrelatedTail));
                     for (std::size_t j = 0; j < k; ++j) {
                       const auto cond = condition_on_empty_level(c.params, j);
                       CompensatedSum p0;
                       table.box().for_each([&](std::uint64_t idx, std::span<const Count> n) {
                         if (n[j] == 0) p0 += table.masses()[idx];
                       });
                       table.box().for_each([&](std::uint64_t idx, std::span<const Count> n) {
                         if (n[j] != 0) return;
                         std::vector<Count> rest;
                         for (std::size_t i = 0; i < k; ++i) {
                           if (i != j) rest.push_back(n[i]);
                         }
                         run.compare(prob_corr(cond, Occupancy(rest)), table.masses()[idx] / p0.value(),
                                     table.certified_tail() / p0.value());
                       });
                       if (k == 2) {
                         // Refit omega' from the conditional mass of the empty remaining state.
                         const std::size_t other = 1 - j;
                         std::vector<Count> n(2, 0);
                         const double p_empty = table.at(n) / p0.value();
                         run.compare(cond.omega(), (1.0 - p_empty) / c.params.q0()[other],
                                     table.certified_tail() / p0.value() / c.params.q0()[other]);
                       }
                     }
                     run.work(k * (table.masses().size() << k));
                   }
                 }});

  out.push_back({"correlated.iterated_conditioning",
                 "conditioning on two empty levels one at a time, in either order, against enumeration",
                 ToleranceKind::Absolute, 1e-12, 200'000, [](CheckRun& run) {
                   for (const auto& c : correlated_cases()) {
                     if (c.params.size() != 3) continue;
                     const Law law = c.params;
                     const auto table = enumerate_masses(law, TruncationSpec::for_law(law, kCorrelatedTail));
                     // Keep state 2; condition on states 0 and 1 being empty.
                     const auto a = condition_on_empty_level(condition_on_empty_level(c.params, 0), 0);
                     const auto b = condition_on_empty_level(condition_on_empty_level(c.params, 1), 0);
                     run.compare(a.omega(), b.omega());
                     CompensatedSum p0;
                     table.box().for_each([&](std::uint64_t idx, std::span<const Count> n) {
                       if (n[0] == 0 && n[1] == 0) p0 += table.masses()[idx];
                     });
                     table.box().for_each([&](std::uint64_t idx, std::span<const Count> n) {
                       if (n[0] != 0 || n[1] != 0) return;
                       const double oracle = table.masses()[idx] / p0.value();
                       const double allowance = table.certified_tail() / p0.value();
                       run.compare(prob_corr(a, Occupancy({n[2]})), oracle, allowance);
                       run.compare(prob_corr(b, Occupancy({n[2]})), oracle, allowance);
                     });
                     run.work(table.masses().size() << 3);
                   }
                 }});
}

// ---- sampling --------------------------------------------------------------

void add_sampling_checks(std::vector<Entry>& out) {
  const ChainSpec spec({0.5, 0.3, 0.8}, {1.0, 1.0, 2.0});
  const auto pi = [spec](std::span<const Count> n) {
    double w = 1.0;
    for (std::size_t j = 0; j < n.size(); ++j) {
      const double q = spec.birth()[j] / spec.death()[j];
      w *= 1.0 - q;
      for (Count m = 0; m < n[j]; ++m) w *= q;
    }
    return w;
  };

  out.push_back({"sampling.chain_detailed_balance",
                 "pi(n) P(n -> n+e_j) = pi(n+e_j) P(n+e_j -> n) for the product law, n in [0,4]^3",
                 ToleranceKind::Relative, 1e-12, 400, [spec, pi](CheckRun& run) {
                   BoxIndexer({4, 4, 4}).for_each([&](std::uint64_t, std::span<const Count> c) {
                     const Occupancy n(std::vector<Count>(c.begin(), c.end()));
                     for (std::size_t j = 0; j < 3; ++j) {
                       const auto up = n.plus(j);
                       run.compare(pi(n.counts()) * transition_probability(spec, n, up),
                                   pi(up.counts()) * transition_probability(spec, up, n));
                     }
                     run.work(3);
                   });
                 }});

  out.push_back({"sampling.chain_stationarity", "one step of the chain maps the product law to itself on [0,3]^3",
                 ToleranceKind::Relative, 1e-12, 500, [spec, pi](CheckRun& run) {
                   BoxIndexer({3, 3, 3}).for_each([&](std::uint64_t, std::span<const Count> c) {
                     const Occupancy n(std::vector<Count>(c.begin(), c.end()));
                     CompensatedSum inflow;
                     inflow += pi(n.counts()) * transition_probability(spec, n, n);
                     for (std::size_t j = 0; j < 3; ++j) {
                       const auto up = n.plus(j);
                       inflow += pi(up.counts()) * transition_probability(spec, up, n);
                       if (n[j] > 0) {
                         const auto down = n.minus(j);
                         inflow += pi(down.counts()) * transition_probability(spec, down, n);
                       }
                     }
                     run.compare(inflow.value(), pi(n.counts()));
                     run.work(7);
                   });
                 }});
}

}  // namespace

VerificationReport run_verification_suite(const SuiteBudget& budget) {
  std::vector<Entry> entries;
  add_core_checks(entries);
  add_ensemble_checks(entries);
  add_correlated_checks(entries);
  add_sampling_checks(entries);

  VerificationReport report;
  for (auto& e : entries) {
    VerificationCheck check;
    check.name = e.name;
    check.description = e.description;
    check.tolerance = e.tolerance;
    check.tolerance_kind = e.kind;
    if (e.cost > budget.max_terms) {
      check.status = CheckStatus::Skipped;
      report.checks.push_back(std::move(check));
      continue;
    }
    CheckRun run(e.kind, e.tolerance);
    try {
      e.body(run);
      run.fill(check);
      if (run.points() == 0) check.description += " [no points compared]";
    } catch (const std::exception& ex) {
      run.fill(check);
      check.status = CheckStatus::Failed;
      check.description += std::string(" [error: ") + ex.what() + "]";
    }
    report.checks.push_back(std::move(check));
  }
  return report;
}

}  // namespace partstat
