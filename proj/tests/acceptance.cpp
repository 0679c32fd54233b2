// Acceptance gate: one PASS/FAIL line per criterion, tolerances and runtime
// limits pinned below.
//
// Exit status is 0 when every criterion passes except those listed in
// kUnattainable, which must still FAIL (a listed criterion that starts passing
// is reported as an error so the list cannot go stale).

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "partstat/correlated.hpp"
#include "partstat/ensembles.hpp"
#include "partstat/oracle.hpp"
#include "partstat/sampling.hpp"
#include "partstat/summation.hpp"
#include "partstat/thermo.hpp"

using namespace partstat;

namespace {

// Criterion 5 asks Gentile(200) to match Bose-Einstein within 1e-10 up to
// q = 0.9, but the exact gap there is (K+1) q^(K+1) / (1 - q^(K+1)) ~ 1.3e-7.
// See README "Acceptance".
const std::set<int> kUnattainable = {5};

constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Worst-point tracker for "value within tolerance" sweeps.
class Sweep {
 public:
  Sweep(std::string what, double tol, bool relative) : what_(std::move(what)), tol_(tol), relative_(relative) {}

  void add(double value, double reference, const std::string& where) {
    double d = std::fabs(value - reference);
    if (relative_) d /= std::fabs(reference);
    if (points_ == 0 || !(d <= worst_)) {  // NaN lands here too
      worst_ = std::isnan(d) ? INFINITY : d;
      where_ = where;
    }
    ++points_;
  }

  bool pass() const { return points_ > 0 && worst_ <= tol_; }
  std::string describe() const {
    std::ostringstream s;
    s.precision(3);
    s << what_ << ": worst " << (relative_ ? "rel " : "abs ") << worst_ << " at " << where_ << " (tol " << tol_
      << ", " << points_ << " pts)";
    return s.str();
  }

 private:
  std::string what_;
  double tol_;
  bool relative_;
  double worst_ = 0.0;
  std::string where_ = "-";
  std::size_t points_ = 0;
};

Outcome combine(std::initializer_list<const Sweep*> sweeps, std::vector<std::string> extra = {},
                bool extra_pass = true) {
  Outcome o;
  o.pass = extra_pass;
  std::string sep;
  for (const auto* s : sweeps) {
    o.pass = o.pass && s->pass();
    o.detail += sep + s->describe();
    sep = "; ";
  }
  for (const auto& e : extra) {
    o.detail += sep + e;
    sep = "; ";
  }
  return o;
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

std::string at(std::initializer_list<double> xs) {
  std::ostringstream s;
  s << '(';
  std::string sep;
  for (double x : xs) {
    s << sep << x;
    sep = ",";
  }
  s << ')';
  return s.str();
}

// ---------------------------------------------------------------------------

Outcome ratio_property() {
  const auto kind = EnsembleKind::bose_einstein();
  const auto q = QVector::bose({0.5, 0.3, 0.2});
  Sweep s("P(n+e_j)/P(n) vs q_j", 1e-12, true);
  for (Count a = 0; a <= 5; ++a) {
    for (Count b = 0; b <= 5; ++b) {
      for (Count c = 0; c <= 5; ++c) {
        const Occupancy n({a, b, c});
        for (std::size_t j = 0; j < 3; ++j) {
          s.add(joint_prob(kind, q, n.plus(j)) / joint_prob(kind, q, n), q[j], n.to_string());
        }
      }
    }
  }
  return combine({&s});
}

const std::vector<std::vector<double>>& pinned_q_sets() {
  static const std::vector<std::vector<double>> sets = {
      {0.5, 0.25},
      {0.9, 0.6, 0.3},
      {0.8, 0.6, 0.35, 0.1},
  };
  return sets;
}

Outcome partition_identity() {
  Sweep s("closed vs direct Z_gc", 1e-9, true);
  for (const auto& qs : pinned_q_sets()) {
    const auto q = QVector::bose(qs);
    for (Count n = 0; n <= 20; ++n) {
      s.add(zgc_closed(q, n), zgc_direct(q, n), "k=" + std::to_string(qs.size()) + " N=" + std::to_string(n));
    }
  }
  return combine({&s});
}

Outcome conditional_mean() {
  Sweep closed("closed vs enumerated E(n_i|N)", 1e-8, true);
  Sweep total("sum_i E(n_i|N) - N", 1e-10, false);
  bool all_routes = true;
  for (const auto& qs : pinned_q_sets()) {
    const auto q = QVector::bose(qs);
    for (Count n = 1; n <= 20; ++n) {
      double sum = 0.0;
      for (std::size_t i = 0; i < qs.size(); ++i) {
        const auto m = conditional_mean_given_N(q, i, n);
        all_routes = all_routes && m.closed_form && m.enumerated;
        if (m.closed_form && m.enumerated) {
          closed.add(*m.closed_form, *m.enumerated,
                     "k=" + std::to_string(qs.size()) + " N=" + std::to_string(n) + " i=" + std::to_string(i + 1));
        }
        sum += m.value;
      }
      total.add(sum, n, "k=" + std::to_string(qs.size()) + " N=" + std::to_string(n));
    }
  }
  return combine({&closed, &total}, {all_routes ? "both routes ran everywhere" : "some route missing"}, all_routes);
}

Outcome condensation() {
  const auto q = QVector::bose({0.5, 0.25});
  const double limit = condensation_limit(q, 0, 1);
  const double excited = conditional_mean_given_N(q, 1, 60).value;
  const double ground = conditional_mean_given_N(q, 0, 60).value / 60.0;
  Sweep s("E(n_2|60) vs limit " + fmt(limit), 0.01, false);
  s.add(excited, limit, "N=60");
  const bool frac = ground >= 0.97;
  return combine({&s}, {"E(n_1|60)/60 = " + fmt(ground) + " (>= 0.97)"}, frac);
}

Outcome gentile_limits() {
  Sweep fd("Gentile(1) vs FD", 1e-14, false);
  Sweep be("Gentile(200) vs BE", 1e-10, false);
  const auto g1 = EnsembleKind::gentile(1);
  const auto g200 = EnsembleKind::gentile(200);
  for (int i = 1; i <= 9; ++i) {
    const double q = i / 10.0;
    fd.add(mean_occupancy(g1, q), mean_occupancy(EnsembleKind::fermi_dirac(), q), "q=" + fmt(q));
    be.add(mean_occupancy(g200, q), mean_occupancy(EnsembleKind::bose_einstein(), q), "q=" + fmt(q));
  }
  // Smallest cap that would meet the tolerance at q = 0.9, for the record.
  Count need = 200;
  while (std::fabs(mean_occupancy(EnsembleKind::gentile(need), 0.9) - 9.0) > 1e-10) ++need;
  return combine({&fd, &be}, {"q=0.9 needs K >= " + std::to_string(need)});
}

Outcome stationarity() {
  constexpr double h = 1e-5;
  Sweep s("dPhi/dq at the thermal ratio", 1e-6, false);
  for (double beta : {0.5, 1.0, 2.0}) {
    for (double mu : {-1.0, -0.75, -0.5, -0.25, 0.0}) {
      for (double eps : {0.25, 0.5, 0.75, 1.0, 1.25}) {
        const ThermoParams p(beta, mu);
        const double q = q_thermo(p, eps).q;
        const double d = (grand_potential(q + h, p, eps) - grand_potential(q - h, p, eps)) / (2 * h);
        s.add(d, 0.0, "beta,mu,eps=" + at({beta, mu, eps}));
      }
    }
  }
  return combine({&s});
}

Outcome correlated_family() {
  const std::vector<std::pair<std::string, CorrelatedParams>> cases = {
      {"omega=0.8", CorrelatedParams({0.6, 0.4, 0.3}, {0.5, 0.7, 0.2}, 0.8)},
      {"omega=1", CorrelatedParams({0.5, 0.3, 0.2}, {0.4, 0.6, 0.3}, 1.0)},
      {"omega=4/3", CorrelatedParams({0.5, 0.5}, {0.5, 0.5}, 4.0 / 3)},
  };
  Sweep moments("moments vs enumeration", 1e-8, false);
  Sweep entropy("entropy decomposition vs summed entropy", 1e-10, false);
  double gap_independent = NAN, gap_coupled = NAN;
  for (const auto& [name, p] : cases) {
    const Law law{p};
    const auto trunc = TruncationSpec::for_law(law, 1e-12);
    const auto table = enumerate_masses(law, trunc);
    const auto oracle = oracle_moments(table);
    const auto m = moments_corr(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
      moments.add(m.means[i], oracle.means[i], name + " E n_" + std::to_string(i + 1));
      for (std::size_t j = 0; j < p.size(); ++j) {
        moments.add(m.pair_means(i, j), oracle.second(i, j),
                    name + " E n_" + std::to_string(i + 1) + "n_" + std::to_string(j + 1));
        moments.add(m.covariances(i, j), oracle.covariances(i, j),
                    name + " cov_" + std::to_string(i + 1) + std::to_string(j + 1));
      }
      entropy.add(entropy_marginal_corr(p, i), oracle_marginal_entropy(law, i).value,
                  name + " S_" + std::to_string(i + 1));
    }
    if (name == "omega=1") gap_independent = mixing_entropy_gap(p);
    if (name == "omega=4/3") gap_coupled = mixing_entropy_gap(p);
  }
  const bool gaps = std::fabs(gap_independent) < 1e-9 && gap_coupled > 0.0;
  return combine({&moments, &entropy},
                 {"mixing gap " + fmt(gap_independent) + " at omega=1 (|.| < 1e-9), " + fmt(gap_coupled) +
                  " at omega=4/3 (> 0)"},
                 gaps);
}

Outcome no_vacuum() {
  Sweep s("no-vacuum law vs conditioned product law", 1e-15, true);
  bool vacuum_zero = true;
  const auto be = EnsembleKind::bose_einstein();
  for (const std::vector<double>& qs : {std::vector<double>{0.5, 0.5}, std::vector<double>{0.6, 0.3, 0.45}}) {
    const auto q = QVector::bose(qs);
    const auto p = condition_no_vacuum(q);
    vacuum_zero = vacuum_zero && p.vacuum_mass() == 0.0 && prob_corr(p, Occupancy::zeros(qs.size())) == 0.0;
    const double leave = 1.0 - joint_prob(be, q, Occupancy::zeros(qs.size()));
    const BoxIndexer box(std::vector<Count>(qs.size(), 12));
    box.for_each([&](std::uint64_t, std::span<const Count> n) {
      const Occupancy occ(std::vector<Count>(n.begin(), n.end()));
      if (occ.is_vacuum()) return;
      s.add(prob_corr(p, occ), joint_prob(be, q, occ) / leave, occ.to_string());
    });
  }
  return combine({&s}, {vacuum_zero ? "vacuum mass exactly 0" : "vacuum mass not 0"}, vacuum_zero);
}

Outcome conditioning_preservation() {
  const auto kind = EnsembleKind::bose_einstein();
  const auto q = QVector::bose({0.5, 0.3, 0.2});
  Sweep sum("given n_3 = n_1 + n_2: ratios q_1q_3, q_2q_3", 1e-12, true);
  Sweep equal("given n_1 = n_2: ratio q_1q_2", 1e-12, true);

  // Conditional law of (n_1, n_2) on the event n_3 = n_1 + n_2, normalized on
  // the truncated grid.
  constexpr Count kGrid = 8;
  auto on_sum = [&](Count a, Count b) { return joint_prob(kind, q, Occupancy({a, b, a + b})); };
  CompensatedSum z;
  for (Count a = 0; a <= kGrid; ++a) {
    for (Count b = 0; b <= kGrid; ++b) z += on_sum(a, b);
  }
  for (Count a = 0; a < kGrid; ++a) {
    for (Count b = 0; b < kGrid; ++b) {
      const double here = on_sum(a, b) / z.value();
      sum.add(on_sum(a + 1, b) / z.value() / here, q[0] * q[2], at({double(a), double(b)}));
      sum.add(on_sum(a, b + 1) / z.value() / here, q[1] * q[2], at({double(a), double(b)}));
    }
  }

  // Law of the common value m = n_1 = n_2, with n_3 summed out on its box.
  const auto trunc = TruncationSpec::for_law(Law{ProductLaw{kind, q}}, 1e-14);
  const Count m3 = trunc.cutoffs()[2];
  auto common = [&](Count m) {
    CompensatedSum s;
    for (Count n3 = 0; n3 <= m3; ++n3) s += joint_prob(kind, q, Occupancy({m, m, n3}));
    return s.value();
  };
  for (Count m = 0; m < kGrid; ++m) equal.add(common(m + 1) / common(m), q[0] * q[1], "m=" + std::to_string(m));
  return combine({&sum, &equal});
}

double mean_of(const std::vector<Occupancy>& draws, std::size_t j) {
  CompensatedSum s;
  for (const auto& d : draws) s += d[j];
  return s.value() / static_cast<double>(draws.size());
}

Outcome sampling() {
  constexpr std::size_t n = 100000;
  std::vector<std::string> lines;
  bool pass = true;
  auto judge = [&](const std::string& what, double mean, double target, double se) {
    const double z = (mean - target) / se;
    pass = pass && std::fabs(z) < 3.0;
    lines.push_back(what + " z=" + fmt(z));
  };

  {
    const auto d = sample_batch(EnsembleKind::bose_einstein(), QVector::bose({0.5}), kSeed, n);
    judge("BE q=0.5", mean_of(d, 0), 1.0, std::sqrt(0.5 / 0.25 / n));
  }
  {
    const double q = 3.0, p = q / (1 + q);
    const auto d = sample_batch(EnsembleKind::fermi_dirac(), QVector::positive({q}), kSeed, n);
    judge("FD q=3", mean_of(d, 0), p, std::sqrt(p * (1 - p) / n));
  }
  {
    // Truncated geometric moments by enumerating the four weights.
    const double q = 0.9;
    double z = 0, m1 = 0, m2 = 0, w = 1;
    for (int k = 0; k <= 3; ++k, w *= q) {
      z += w;
      m1 += k * w;
      m2 += k * k * w;
    }
    const double mean = m1 / z, var = m2 / z - mean * mean;
    const auto d = sample_batch(EnsembleKind::gentile(3), QVector::positive({q}), kSeed, n);
    judge("Gentile(3) q=0.9", mean_of(d, 0), mean, std::sqrt(var / n));
  }
  {
    const CorrelatedParams p({0.5, 0.5}, {0.5, 0.5}, 4.0 / 3);
    const auto m = moments_corr(p);
    SeededSource src(kSeed);
    std::vector<Occupancy> d;
    d.reserve(n);
    for (std::size_t i = 0; i < n; ++i) d.push_back(sample_correlated(p, src));
    for (std::size_t j = 0; j < 2; ++j) {
      judge("correlated n_" + std::to_string(j + 1), mean_of(d, j), m.means[j], std::sqrt(m.covariances(j, j) / n));
    }
  }
  {
    const ChainSpec spec({0.5, 0.3, 0.8}, {1.0, 1.0, 2.0});
    SeededSource src(kSeed);
    const auto path = run_chain(spec, Occupancy::zeros(3), 10000, 1000000, src);
    EmpiricalOptions opt;
    opt.batches = 50;
    const auto rep = empirical_report(path, opt);
    for (std::size_t j = 0; j < 3; ++j) {
      judge("chain n_" + std::to_string(j + 1), rep.means[j], spec.q(j) / (1 - spec.q(j)), rep.standard_errors[j]);
    }
  }
  Outcome o;
  o.pass = pass;
  o.detail = "|z| < 3:";
  for (const auto& l : lines) o.detail += " " + l + ";";
  return o;
}

struct Captured {
  int status;
  std::string out;
};

Captured capture(const std::string& command) {
  Captured c{-1, {}};
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return c;
  std::array<char, 4096> buf;
  while (const std::size_t got = std::fread(buf.data(), 1, buf.size(), pipe)) c.out.append(buf.data(), got);
  const int raw = pclose(pipe);
  c.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return c;
}

Outcome end_to_end() {
  Outcome o;
  const auto good = capture(std::string("'") + PARTSTAT_CLI_PATH + "' verify --format json 2>/dev/null");
  std::size_t checks = 0, passed = 0;
  try {
    const auto j = nlohmann::json::parse(good.out);
    checks = j.at("summary").at("checks").get<std::size_t>();
    passed = j.at("summary").at("passed").get<std::size_t>();
  } catch (const std::exception&) {
  }
  const auto bad = capture(std::string("'") + PARTSTAT_FAULTY_CLI_PATH + "' verify 2>/dev/null");
  o.pass = good.status == 0 && checks > 0 && passed == checks && bad.status != 0 && bad.status != -1;
  o.detail = "verify exit " + std::to_string(good.status) + ", " + std::to_string(passed) + "/" +
             std::to_string(checks) + " passed; perturbed build exit " + std::to_string(bad.status) + " (nonzero)";
  return o;
}

struct Criterion {
  int id;
  std::string title;
  double time_limit;
  std::function<Outcome()> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "ratio property", 1.0, ratio_property},
      {2, "partition identity", 5.0, partition_identity},
      {3, "conditional mean", 5.0, conditional_mean},
      {4, "condensation", 10.0, condensation},
      {5, "Gentile limits", 1.0, gentile_limits},
      {6, "grand-potential stationarity", 1.0, stationarity},
      {7, "correlated family", 5.0, correlated_family},
      {8, "no-vacuum equivalence", 1.0, no_vacuum},
      {9, "conditioning preservation", 2.0, conditioning_preservation},
      {10, "sampling", 30.0, sampling},
      {11, "end-to-end verify", 60.0, end_to_end},
  };

  int unexpected = 0;
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.time_limit;
    const bool pass = o.pass && in_time;
    std::printf("[%s] criterion %2d %-28s %.3fs (limit %.0fs)%s | %s\n", pass ? "PASS" : "FAIL", c.id,
                c.title.c_str(), secs, c.time_limit, in_time ? "" : " TOO SLOW", o.detail.c_str());
    if (!pass) ++failed;
    const bool listed = kUnattainable.count(c.id) > 0;
    if (pass == listed) ++unexpected;
  }
  std::printf("%zu/%zu criteria passed", criteria.size() - failed, criteria.size());
  if (!kUnattainable.empty()) {
    std::printf("; known unattainable as specified:");
    for (int id : kUnattainable) std::printf(" %d", id);
  }
  std::printf("\n");
  if (unexpected > 0) std::printf("%d criteria deviate from the expected outcome\n", unexpected);
  return unexpected == 0 ? 0 : 1;
}
