#include "partstat_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "partstat/correlated.hpp"
#include "partstat/ensembles.hpp"
#include "partstat/error.hpp"
#include "partstat/oracle.hpp"
#include "partstat/sampling.hpp"
#include "partstat/summation.hpp"
#include "partstat/thermo.hpp"
#include "partstat_cli/level_file.hpp"
#include "partstat_cli/table.hpp"

namespace partstat::cli {
namespace {

struct Common {
  std::string format = "csv";
  std::string out_path;
  std::uint64_t seed = 0;
  std::uint64_t budget = EnumerationBudget{}.max_terms;
  std::string levels_path;
};

// Everything the subcommands read; each subcommand binds the subset it uses.
struct Inputs {
  std::string kind = "be";
  Count cap = 0;
  double beta = 1.0;
  double mu = 0.0;
  std::vector<double> nu;
  std::vector<double> eps;
  std::vector<double> q;
  std::vector<double> q0;
  double omega = 1.0;
  bool no_vacuum = false;
  double target = 0.0;
  Count n_min = 0;
  Count n_max = 20;
  double min_gap = ClosedFormOptions{}.min_gap;
  std::vector<Count> totals = {0, 5, 10, 20, 40, 60};
  std::string mode = "be";
  std::size_t draws = 10'000;
  unsigned threads = 1;
  bool emit_draws = false;
  Count histogram_cutoff = 20;
  std::vector<double> birth;
  std::vector<double> death;
  std::string moves = "uniformized";
  std::size_t burn_in = 10'000;
  std::size_t batches = 20;
};

struct Flags {
  CLI::Option* beta = nullptr;
  CLI::Option* mu = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* q0 = nullptr;
  CLI::Option* omega = nullptr;
  CLI::Option* cap = nullptr;
};

bool given(const CLI::Option* opt) { return opt != nullptr && opt->count() > 0; }

std::int64_t as_int(std::uint64_t v) { return static_cast<std::int64_t>(v); }

std::string indexed(const char* prefix, std::size_t j) { return prefix + std::to_string(j + 1); }

// ---- input resolution ------------------------------------------------------

void add_common(CLI::App* sub, Common& c, Flags& f) {
  sub->add_option("--format", c.format, "Output format (csv or json)")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--out", c.out_path, "Write the output to PATH instead of stdout");
  f.seed = sub->add_option("--seed", c.seed, "Random seed (sampling)");
  sub->add_option("--budget", c.budget, "Enumeration budget in terms");
  sub->add_option("--levels", c.levels_path, "Level file: energy [charges...] per line, # comments");
}

void add_thermo(CLI::App* sub, Inputs& in, Flags& f) {
  f.beta = sub->add_option("--beta", in.beta, "Inverse temperature")->check(CLI::PositiveNumber);
  f.mu = sub->add_option("--mu", in.mu, "Chemical potential");
  sub->add_option("--nu", in.nu, "Intensive variables dual to the level charges")->delimiter(',');
  sub->add_option("--eps", in.eps, "Level energies (instead of --levels)")->delimiter(',');
}

void add_kind(CLI::App* sub, Inputs& in, Flags& f) {
  sub->add_option("--kind", in.kind, "Statistics: be, fd or gentile")->check(CLI::IsMember({"be", "fd", "gentile"}));
  f.cap = sub->add_option("--K", in.cap, "Gentile occupation cap")->check(CLI::PositiveNumber);
}

EnsembleKind kind_from(const Inputs& in, const Flags& f) {
  if (in.kind == "gentile") {
    if (!given(f.cap)) throw UsageError("--kind gentile needs --K");
    return EnsembleKind::gentile(in.cap);
  }
  if (given(f.cap)) throw UsageError("--K only applies to --kind gentile");
  return in.kind == "fd" ? EnsembleKind::fermi_dirac() : EnsembleKind::bose_einstein();
}

LevelSystem levels_from(const Common& c, const Inputs& in) {
  if (!c.levels_path.empty() && !in.eps.empty()) throw UsageError("give either --levels or --eps, not both");
  if (!c.levels_path.empty()) return read_levels(c.levels_path);
  if (!in.eps.empty()) return LevelSystem(in.eps);
  throw UsageError("no levels given (use --levels PATH or --eps LIST)");
}

ThermoParams thermo_from(const Inputs& in, const Flags& f, const LevelSystem& levels) {
  if (!given(f.beta)) throw UsageError("--beta is required");
  if (in.nu.empty()) {
    if (!given(f.mu)) throw UsageError("--mu is required (or --nu with a charged level file)");
    return ThermoParams(in.beta, in.mu);
  }
  if (!levels.has_charges()) throw UsageError("--nu needs a level file with charge columns");
  ThermoParams params(in.beta, in.mu, in.nu);
  params.check_compatible(levels);
  return params;
}

QVector q_from_values(const std::vector<double>& q) {
  const bool unit = std::all_of(q.begin(), q.end(), [](double x) { return x > 0.0 && x < 1.0; });
  return QVector(q, unit ? QRegime::UnitInterval : QRegime::Positive);
}

// Ratios either given directly by --q or derived from (beta, mu, levels).
QVector q_from(const Common& c, const Inputs& in, const Flags& f) {
  if (!in.q.empty()) {
    if (given(f.beta) || given(f.mu) || !in.nu.empty() || !in.eps.empty() || !c.levels_path.empty()) {
      throw UsageError("give either --q or thermodynamic inputs (--beta, --mu, levels), not both");
    }
    return q_from_values(in.q);
  }
  const LevelSystem levels = levels_from(c, in);
  return q_vector(thermo_from(in, f, levels), levels);
}

void require_bose(const EnsembleKind& kind, const QVector& q, const char* what) {
  if (kind.needs_unit_interval() && !q.in_unit_interval()) {
    throw DomainError(std::string(what) + ": Bose-Einstein needs every q in (0,1)");
  }
}

// ---- occupancy -------------------------------------------------------------

Document cmd_occupancy(const Common& c, const Inputs& in, const Flags& f) {
  const EnsembleKind kind = kind_from(in, f);
  const LevelSystem levels = levels_from(c, in);
  const ThermoParams params = thermo_from(in, f, levels);
  const QVector q = q_vector(params, levels);

  if (kind.needs_unit_interval() && !q.in_unit_interval()) {
    std::ostringstream msg;
    msg << "occupancy: Bose-Einstein needs ";
    if (params.nu()) {
      for (std::size_t j = 0; j < q.size(); ++j) {
        if (!(q[j] < 1.0)) {
          msg << "(nu,u_j) < eps_j on every level; level " << j + 1 << " has q = " << format_number(q[j]);
          break;
        }
      }
    } else {
      msg << "mu < min eps (mu = " << format_number(params.mu())
          << ", min eps = " << format_number(levels.min_energy()) << ")";
    }
    throw DomainError(msg.str());
  }

  Document doc;
  doc.command = "occupancy";
  doc.main.columns = {"state", "eps", "q", "mean"};
  CompensatedSum total;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double mean = mean_occupancy(kind, q[j]);
    total += mean;
    doc.main.add_row({as_int(j + 1), levels.energy(j), q[j], mean});
  }
  doc.main.add_row({std::string("total"), std::monostate{}, std::monostate{}, total.value()});
  doc.summary = {{"kind", kind.name()}, {"beta", params.beta()}, {"total", total.value()}};
  if (!params.nu()) doc.summary.emplace_back("mu", params.mu());
  return doc;
}

// ---- solve-mu --------------------------------------------------------------

// Mean occupation of one level at x = beta (eps - mu), safe at both extremes.
double level_mean(const EnsembleKind& kind, double x) {
  if (x > 700.0) return 0.0;  // q underflows: the level is empty to double precision
  if (x < -700.0) {
    if (kind.needs_unit_interval()) return std::numeric_limits<double>::infinity();
    return static_cast<double>(*kind.max_occupancy());
  }
  if (kind.needs_unit_interval()) return x > 0.0 ? 1.0 / std::expm1(x) : std::numeric_limits<double>::infinity();
  return mean_occupancy(kind, std::exp(-x));
}

double total_mean(const EnsembleKind& kind, double beta, const LevelSystem& levels, double mu) {
  CompensatedSum s;
  for (double e : levels.energies()) s += level_mean(kind, beta * (e - mu));
  return s.value();
}

struct MuSolution {
  double mu;
  double total;
  int iterations;
};

MuSolution solve_mu(const EnsembleKind& kind, double beta, const LevelSystem& levels, double target) {
  constexpr int kMaxIterations = 200;
  const double k = static_cast<double>(levels.size());
  const double e_min = levels.min_energy();
  const double e_max = *std::max_element(levels.energies().begin(), levels.energies().end());
  if (const auto cap = kind.max_occupancy(); cap && !(target < k * *cap)) {
    std::ostringstream msg;
    msg << "solve-mu: " << kind.name() << " totals stay below k * cap = " << format_number(k * *cap);
    throw DomainError(msg.str());
  }
  // Below lo every level holds at most target/k particles.
  double lo = e_min - std::log1p(k / target) / beta - 50.0;
  double hi = e_min;
  if (!kind.needs_unit_interval()) {
    hi = e_max;
    double step = 1.0 / beta;
    int grow = 0;
    while (total_mean(kind, beta, levels, hi) < target) {
      if (++grow > kMaxIterations) throw NumericError("solve-mu: could not bracket the target total");
      hi += step;
      step *= 2.0;
    }
  }
  // Bisect down to adjacent doubles, then accept a residual below 1e-10
  // absolute (relative for targets above 1, where absolute 1e-10 is below
  // double resolution).
  const double tol = 1e-10 * std::max(1.0, target);
  for (int it = 1; it <= kMaxIterations; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    const double total = total_mean(kind, beta, levels, mid);
    const double residual = total - target;
    if (residual == 0.0 || mid == lo || mid == hi) {
      if (std::fabs(residual) > tol) {
        std::ostringstream msg;
        msg << "solve-mu: bracket collapsed with residual " << format_number(residual);
        throw NumericError(msg.str());
      }
      return {mid, total, it};
    }
    (residual < 0.0 ? lo : hi) = mid;
  }
  throw NumericError("solve-mu: no convergence within 200 bisection steps");
}

Document cmd_solve_mu(const Common& c, const Inputs& in, const Flags& f) {
  const EnsembleKind kind = kind_from(in, f);
  const LevelSystem levels = levels_from(c, in);
  if (!given(f.beta)) throw UsageError("--beta is required");
  if (!(in.target > 0.0) || !std::isfinite(in.target)) throw DomainError("solve-mu: --target must be positive");
  const MuSolution s = solve_mu(kind, in.beta, levels, in.target);

  Document doc;
  doc.command = "solve-mu";
  doc.main.columns = {"mu", "total", "residual", "iterations"};
  doc.main.add_row({s.mu, s.total, s.total - in.target, std::int64_t{s.iterations}});
  doc.summary = {{"kind", kind.name()}, {"beta", in.beta}, {"target", in.target}, {"levels", as_int(levels.size())}};
  return doc;
}

// ---- partition -------------------------------------------------------------

Document cmd_partition(const Common& c, const Inputs& in, const Flags& f) {
  const QVector q = q_from(c, in, f);
  if (in.n_min > in.n_max) throw UsageError("--n-min exceeds --n-max");
  const EnumerationBudget budget{c.budget};
  const ClosedFormOptions closed{in.min_gap};

  Document doc;
  doc.command = "partition";
  doc.main.columns = {"N", "direct", "closed", "rel_gap", "status"};
  for (Count n = in.n_min; n <= in.n_max; ++n) {
    Cell direct, closed_cell, gap;
    std::vector<std::string> issues;
    std::optional<double> d, z;
    try {
      d = zgc_direct(q, n, budget);
      direct = *d;
    } catch (const BudgetError&) {
      direct = std::string("over-budget");
      issues.emplace_back("over-budget");
    }
    try {
      z = zgc_closed(q, n, closed);
      closed_cell = *z;
    } catch (const IllConditionedError&) {
      closed_cell = std::string("ill-conditioned");
      issues.emplace_back("ill-conditioned");
    }
    if (d && z) gap = *d != 0.0 ? std::fabs(*z - *d) / std::fabs(*d) : std::fabs(*z - *d);
    std::string status = issues.empty() ? "ok" : issues.front();
    if (issues.size() > 1) status += ";" + issues[1];
    doc.main.add_row({std::int64_t{n}, direct, closed_cell, gap, status});
  }
  doc.summary = {{"states", as_int(q.size())}, {"min_gap", min_pairwise_gap(q)}, {"gap_threshold", in.min_gap}};
  return doc;
}

// ---- condense --------------------------------------------------------------

Document cmd_condense(const Common& c, const Inputs& in, const Flags& f) {
  const QVector q = q_from(c, in, f);
  const std::size_t k = q.size();
  const auto top = std::max_element(q.values().begin(), q.values().end());
  const std::size_t ground = static_cast<std::size_t>(top - q.values().begin());
  if (std::count(q.values().begin(), q.values().end(), *top) > 1) {
    throw DomainError("condense: the maximal q is not unique, so no single state condenses");
  }
  const auto rows = condensation_sweep(q, ground, in.totals, EnumerationBudget{c.budget});

  Document doc;
  doc.command = "condense";
  doc.main.columns = {"N"};
  for (std::size_t j = 0; j < k; ++j) doc.main.columns.push_back(indexed("mean_", j));
  doc.main.columns.push_back("ground_fraction");
  for (const auto& r : rows) {
    std::vector<Cell> row{std::int64_t{r.total}};
    for (double m : r.means) row.emplace_back(m);
    row.emplace_back(std::isnan(r.ground_fraction) ? Cell{} : Cell{r.ground_fraction});
    doc.main.add_row(std::move(row));
  }
  std::vector<Cell> limit{std::string("limit")};
  for (std::size_t j = 0; j < k; ++j) {
    limit.push_back(j == ground ? Cell{} : Cell{condensation_limit(q, ground, j)});
  }
  limit.emplace_back(1.0);
  doc.main.add_row(std::move(limit));
  doc.summary = {{"ground_state", as_int(ground + 1)}, {"ground_q", q[ground]}};
  return doc;
}

// ---- correlated ------------------------------------------------------------

CorrelatedParams correlated_from(const Inputs& in, const Flags& f) {
  if (in.q.empty()) throw UsageError("--q is required");
  if (in.no_vacuum) {
    if (given(f.q0) || given(f.omega)) throw UsageError("--no-vacuum fixes q0 and omega; drop --q0/--omega");
    return condition_no_vacuum(QVector::bose(in.q));
  }
  if (!given(f.q0) || !given(f.omega)) throw UsageError("give --q0 and --omega, or --no-vacuum");
  return CorrelatedParams(in.q, in.q0, in.omega);
}

void add_correlated_inputs(CLI::App* sub, Inputs& in, Flags& f) {
  f.q0 = sub->add_option("--q0", in.q0, "First-particle ratios q0_j")->delimiter(',');
  f.omega = sub->add_option("--omega", in.omega, "Coupling omega");
  sub->add_flag("--no-vacuum", in.no_vacuum, "Use the product law conditioned on n != 0");
}

Document cmd_correlated(const Common& c, const Inputs& in, const Flags& f) {
  const CorrelatedParams params = correlated_from(in, f);
  const std::size_t k = params.size();
  const auto m = moments_corr(params);

  Document doc;
  doc.command = "correlated";
  doc.main.columns = {"state", "q", "q0", "mean", "second_moment", "entropy"};
  for (std::size_t j = 0; j < k; ++j) doc.main.columns.push_back(indexed("cov_", j));
  CompensatedSum entropy_sum;
  for (std::size_t i = 0; i < k; ++i) {
    const double s = entropy_marginal_corr(params, i);
    entropy_sum += s;
    std::vector<Cell> row{as_int(i + 1), params.q()[i], params.q0()[i], m.means[i], m.pair_means(i, i), s};
    for (std::size_t j = 0; j < k; ++j) row.emplace_back(m.covariances(i, j));
    doc.main.add_row(std::move(row));
  }

  double empty = 1.0;
  for (double x : params.q0()) empty *= 1.0 - x;
  doc.summary = {{"omega", params.omega()},
                 {"omega_bound", empty < 1.0 ? 1.0 / (1.0 - empty) : std::numeric_limits<double>::infinity()},
                 {"vacuum_mass", params.vacuum_mass()},
                 {"entropy_sum", entropy_sum.value()}};
  try {
    MixingGapOptions opts;
    opts.budget.max_terms = c.budget;
    doc.summary.emplace_back("mixing_gap", mixing_entropy_gap(params, opts));
    doc.summary.emplace_back("mixing_gap_status", std::string("ok"));
  } catch (const BudgetError&) {
    doc.summary.emplace_back("mixing_gap", Cell{});
    doc.summary.emplace_back("mixing_gap_status", std::string("over-budget"));
  }
  return doc;
}

// ---- sample ----------------------------------------------------------------

Document stats_document(const std::string& mode, std::span<const Occupancy> draws, std::size_t k,
                        const std::vector<std::optional<double>>& targets, const EmpiricalOptions& opts,
                        bool emit_draws) {
  Document doc;
  doc.command = "sample";
  doc.main.columns = {"state", "mean", "std_error", "variance", "target", "z_score"};
  if (emit_draws) {
    Table t;
    t.columns = {"draw"};
    for (std::size_t j = 0; j < k; ++j) t.columns.push_back(indexed("n_", j));
    for (std::size_t i = 0; i < draws.size(); ++i) {
      std::vector<Cell> row{as_int(i)};
      for (std::size_t j = 0; j < k; ++j) row.emplace_back(std::int64_t{draws[i][j]});
      t.add_row(std::move(row));
    }
    doc.tables.emplace_back("draws", std::move(t));
  }
  doc.summary.emplace_back("mode", mode);
  doc.summary.emplace_back("draws", as_int(draws.size()));
  if (draws.empty()) return doc;

  const EmpiricalReport r = empirical_report(draws, opts);
  for (std::size_t j = 0; j < k; ++j) {
    Cell target, z;
    if (targets[j]) {
      target = *targets[j];
      if (r.standard_errors[j] > 0.0) z = (r.means[j] - *targets[j]) / r.standard_errors[j];
    }
    doc.main.add_row({as_int(j + 1), r.means[j], r.standard_errors[j], r.covariances(j, j), target, z});
  }
  Table cov;
  cov.columns = {"state"};
  for (std::size_t j = 0; j < k; ++j) cov.columns.push_back(indexed("cov_", j));
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<Cell> row{as_int(i + 1)};
    for (std::size_t j = 0; j < k; ++j) row.emplace_back(r.covariances(i, j));
    cov.add_row(std::move(row));
  }
  doc.tables.emplace_back("covariance", std::move(cov));

  Table hist;
  hist.columns = {"state", "n", "count"};
  for (std::size_t j = 0; j < k; ++j) {
    const auto& h = r.histogram[j];
    for (std::size_t m = 0; m < h.size(); ++m) {
      const Cell n = m + 1 < h.size() ? Cell{as_int(m)} : Cell{std::string("overflow")};
      hist.add_row({as_int(j + 1), n, as_int(h[m])});
    }
  }
  doc.tables.emplace_back("histogram", std::move(hist));
  doc.summary.emplace_back("standard_errors", std::string(r.batches ? "batch-means" : "iid"));
  doc.summary.emplace_back("batches", as_int(r.batches));
  return doc;
}

Document cmd_sample(const Common& c, const Inputs& in, const Flags& f, std::ostream& err) {
  if (!given(f.seed)) throw UsageError("sample: --seed is required");
  std::vector<Occupancy> draws;
  std::vector<std::optional<double>> targets;
  std::size_t k = 0;
  EmpiricalOptions opts;
  opts.histogram_cutoff = in.histogram_cutoff;
  std::vector<std::pair<std::string, Cell>> extra;

  if (in.mode == "chain") {
    if (in.birth.empty() || in.death.empty()) throw UsageError("chain mode needs --birth and --death");
    const ChainSpec spec(in.birth, in.death,
                         in.moves == "renormalized" ? ChainMoves::Renormalized : ChainMoves::Uniformized);
    k = spec.size();
    for (std::size_t j = 0; j < k; ++j) {
      // The renormalized chain does not target the product law.
      targets.push_back(spec.moves() == ChainMoves::Uniformized ? std::optional(mean_from_q(spec.q(j)))
                                                                : std::nullopt);
    }
    if (in.draws > 0) {
      SeededSource src(c.seed);
      draws = run_chain(spec, Occupancy::zeros(k), in.burn_in, in.draws, src);
    }
    opts.batches = in.batches;
    extra = {{"burn_in", as_int(in.burn_in)}, {"moves", in.moves}};
  } else if (in.mode == "correlated") {
    const CorrelatedParams params = correlated_from(in, f);
    k = params.size();
    const auto m = moments_corr(params);
    for (double mean : m.means) targets.emplace_back(mean);
    SeededSource src(c.seed);
    const CorrelatedSampler sampler(params);
    draws.reserve(in.draws);
    for (std::size_t i = 0; i < in.draws; ++i) draws.push_back(sampler(src));
    extra = {{"omega", params.omega()}, {"vacuum_mass", params.vacuum_mass()}};
  } else {
    Inputs product = in;
    product.kind = in.mode;
    const EnsembleKind kind = kind_from(product, f);
    const QVector q = q_from(c, in, f);
    require_bose(kind, q, "sample");
    k = q.size();
    for (std::size_t j = 0; j < k; ++j) targets.emplace_back(mean_occupancy(kind, q[j]));
    draws = sample_batch(kind, q, c.seed, in.draws, std::max(1U, in.threads));
    extra = {{"kind", kind.name()}, {"threads", std::int64_t{in.threads}}};
  }

  if (in.draws == 0) err << "partstat sample: no draws requested; pass --draws N with N >= 2 for statistics\n";
  Document doc = stats_document(in.mode, draws, k, targets, opts, in.emit_draws);
  doc.summary.emplace_back("seed", as_int(c.seed));
  doc.summary.emplace_back("algorithm", std::string(SeededSource::algorithm()));
  for (auto& e : extra) doc.summary.push_back(std::move(e));
  return doc;
}

// ---- verify ----------------------------------------------------------------

Document cmd_verify(const Common& c, bool& all_passed) {
  const VerificationReport report = run_verification_suite(SuiteBudget{c.budget});
  Document doc;
  doc.command = "verify";
  doc.main.columns = {"name",          "status",    "target",         "oracle",      "abs_discrepancy",
                      "rel_discrepancy", "tolerance", "tolerance_kind", "budget_used", "description"};
  for (const auto& ch : report.checks) {
    doc.main.add_row({ch.name, to_string(ch.status), ch.target, ch.oracle, ch.abs_discrepancy, ch.rel_discrepancy,
                      ch.tolerance, to_string(ch.tolerance_kind), as_int(ch.budget_used), ch.description});
  }
  doc.summary = {{"checks", as_int(report.checks.size())},
                 {"passed", as_int(report.count(CheckStatus::Passed))},
                 {"failed", as_int(report.count(CheckStatus::Failed))},
                 {"skipped", as_int(report.count(CheckStatus::Skipped))},
                 {"budget", as_int(c.budget)}};
  all_passed = report.all_passed();
  return doc;
}

void emit(const Document& doc, const Common& c, std::ostream& out) {
  auto write = [&](std::ostream& os) {
    if (c.format == "json") {
      write_json(doc, os);
    } else {
      write_csv(doc, os);
    }
  };
  if (c.out_path.empty()) {
    write(out);
    return;
  }
  std::ofstream file(c.out_path);
  if (!file) throw DomainError("cannot open --out path '" + c.out_path + "'");
  write(file);
  if (!file) throw DomainError("failed writing '" + c.out_path + "'");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"partstat: particle-statistics distributions, samplers and cross-checks"};
  app.require_subcommand(1, 1);
  Common common;
  Inputs in;
  // Option handles differ per subcommand; only the parsed one is consulted.
  Flags f_occupancy, f_solve, f_partition, f_condense, f_correlated, f_sample, f_verify;

  auto* occupancy = app.add_subcommand("occupancy", "Mean occupation per level (BE, FD, Gentile)");
  add_common(occupancy, common, f_occupancy);
  add_thermo(occupancy, in, f_occupancy);
  add_kind(occupancy, in, f_occupancy);

  auto* solve = app.add_subcommand("solve-mu", "Chemical potential giving a target total occupation");
  add_common(solve, common, f_solve);
  add_thermo(solve, in, f_solve);
  add_kind(solve, in, f_solve);
  solve->add_option("--target", in.target, "Target total occupation")->required();

  auto* partition = app.add_subcommand("partition", "Reduced partition function Z_gc(N), direct and closed form");
  add_common(partition, common, f_partition);
  add_thermo(partition, in, f_partition);
  partition->add_option("--q", in.q, "Ratios q_j (instead of thermodynamic inputs)")->delimiter(',');
  partition->add_option("--n-min", in.n_min, "Smallest N");
  partition->add_option("--n-max", in.n_max, "Largest N");
  partition->add_option("--min-gap", in.min_gap, "Smallest |q_i - q_j| the closed form accepts");

  auto* condense = app.add_subcommand("condense", "Conditional means E(n_j | N) and their large-N limits");
  add_common(condense, common, f_condense);
  add_thermo(condense, in, f_condense);
  condense->add_option("--q", in.q, "Ratios q_j (instead of thermodynamic inputs)")->delimiter(',');
  condense->add_option("--totals", in.totals, "Grid of totals N")->delimiter(',');

  auto* correlated = app.add_subcommand("correlated", "Moments, entropies and mixing gap of the correlated family");
  add_common(correlated, common, f_correlated);
  correlated->add_option("--q", in.q, "Ratios q_j")->delimiter(',');
  add_correlated_inputs(correlated, in, f_correlated);

  auto* sample = app.add_subcommand("sample", "Seeded exact draws or birth-death chain runs with statistics");
  add_common(sample, common, f_sample);
  add_thermo(sample, in, f_sample);
  sample->add_option("--mode", in.mode, "be, fd, gentile, correlated or chain")
      ->check(CLI::IsMember({"be", "fd", "gentile", "correlated", "chain"}));
  f_sample.cap = sample->add_option("--K", in.cap, "Gentile occupation cap")->check(CLI::PositiveNumber);
  sample->add_option("--q", in.q, "Ratios q_j")->delimiter(',');
  add_correlated_inputs(sample, in, f_sample);
  sample->add_option("--draws", in.draws, "Number of draws (chain: recorded steps)");
  sample->add_option("--threads", in.threads, "Worker threads for product-law batches");
  sample->add_flag("--emit-draws", in.emit_draws, "Also output every draw");
  sample->add_option("--cutoff", in.histogram_cutoff, "Histogram cutoff");
  sample->add_option("--birth", in.birth, "Chain birth rates")->delimiter(',');
  sample->add_option("--death", in.death, "Chain death rates")->delimiter(',');
  sample->add_option("--moves", in.moves, "Chain move rule: uniformized or renormalized")
      ->check(CLI::IsMember({"uniformized", "renormalized"}));
  sample->add_option("--burn-in", in.burn_in, "Chain steps discarded before recording");
  sample->add_option("--batches", in.batches, "Batch count for chain standard errors");

  auto* verify = app.add_subcommand("verify", "Run every closed-form-versus-oracle cross-check");
  add_common(verify, common, f_verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    int code = kExitOk;
    Document doc;
    if (*occupancy) {
      doc = cmd_occupancy(common, in, f_occupancy);
    } else if (*solve) {
      doc = cmd_solve_mu(common, in, f_solve);
    } else if (*partition) {
      doc = cmd_partition(common, in, f_partition);
    } else if (*condense) {
      doc = cmd_condense(common, in, f_condense);
    } else if (*correlated) {
      doc = cmd_correlated(common, in, f_correlated);
    } else if (*sample) {
      doc = cmd_sample(common, in, f_sample, err);
    } else {
      bool passed = false;
      doc = cmd_verify(common, passed);
      if (!passed) {
        err << "partstat verify: at least one check failed\n";
        code = kExitChecksFailed;
      }
    }
    emit(doc, common, out);
    return code;
  } catch (const UsageError& e) {
    err << "partstat: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "partstat: parse error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const DomainError& e) {
    err << "partstat: " << e.what() << '\n';
    return kExitDomain;
  } catch (const IllConditionedError& e) {
    err << "partstat: ill-conditioned: " << e.what() << '\n';
    return kExitDomain;
  } catch (const BudgetError& e) {
    err << "partstat: budget exceeded: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const RangeError& e) {
    err << "partstat: range error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const NumericError& e) {
    err << "partstat: numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "partstat: unexpected error: " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace partstat::cli
