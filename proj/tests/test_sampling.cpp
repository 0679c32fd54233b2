#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <vector>

#include "partstat/correlated.hpp"
#include "partstat/ensembles.hpp"
#include "partstat/error.hpp"
#include "partstat/sampling.hpp"
#include "partstat/summation.hpp"

using namespace partstat;

namespace {

// One seed for the whole file, fixed when the file was written.
constexpr std::uint64_t kSeed = 20240611;

const auto kBE = EnsembleKind::bose_einstein();

double chi2_survival(double stat, double dof) {
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), stat));
}

// Goodness of fit of observed cell counts against expected probabilities;
// cells with expectation below 5 are pooled into the last cell.
double chi2_pvalue(const std::vector<double>& observed, const std::vector<double>& probs, double draws) {
  double stat = 0.0, pooled_obs = 0.0, pooled_exp = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double e = probs[i] * draws;
    if (e < 5.0) {
      pooled_obs += observed[i];
      pooled_exp += e;
      continue;
    }
    stat += (observed[i] - e) * (observed[i] - e) / e;
    ++cells;
  }
  if (pooled_exp > 0.0) {
    stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++cells;
  }
  return chi2_survival(stat, cells - 1);
}

double sample_mean(const std::vector<Occupancy>& draws, std::size_t j) {
  CompensatedSum s;
  for (const auto& d : draws) s += d[j];
  return s.value() / static_cast<double>(draws.size());
}

}  // namespace

TEST_CASE("seeded source") {
  // First output of std::mt19937_64 under its default seed 5489; uniforms
  // take the top 53 bits.
  SeededSource src(5489);
  CHECK(src.uniform01() == static_cast<double>(14514284786278117030ULL >> 11) * 0x1.0p-53);
  CHECK(SeededSource::algorithm() == "mt19937_64");

  // Reference splitmix64 output for state 0.
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);

  SeededSource a(kSeed), b(kSeed);
  for (int i = 0; i < 1000; ++i) CHECK(a.uniform01() == b.uniform01());

  SeededSource d1 = SeededSource(kSeed).derive(1);
  SeededSource d2 = SeededSource(kSeed).derive(2);
  CHECK(d1.seed() != d2.seed());
  CHECK(SeededSource(kSeed).derive(1).seed() == d1.seed());

  SeededSource u(1);
  for (int i = 0; i < 10000; ++i) {
    const double x = u.uniform_open();
    CHECK((x > 0.0 && x < 1.0));
  }
}

TEST_CASE("single-state draws") {
  SeededSource src(kSeed);
  CHECK_THROWS_AS(draw_geometric(1.0, src), DomainError);
  CHECK_THROWS_AS(draw_bernoulli_fd(0.0, src), DomainError);
  for (int i = 0; i < 2000; ++i) {
    CHECK(draw_bernoulli_fd(2.5, src) <= 1);
    CHECK(draw_truncated_geometric(0.9, 3, src) <= 3);
    CHECK(draw_truncated_geometric(4.0, 3, src) <= 3);
  }
}

TEST_CASE("Bose-Einstein draws") {
  constexpr std::size_t n = 100000;
  const auto draws = sample_batch(kBE, QVector::bose({0.5}), kSeed, n);
  const double sigma = std::sqrt(0.5 / 0.25 / n);
  CHECK(std::fabs(sample_mean(draws, 0) - 1.0) < 3 * sigma);

  const auto rep = empirical_report(draws);
  const double f0 = static_cast<double>(rep.histogram[0][0]) / n;
  CHECK(std::fabs(f0 - 0.5) < 3 * std::sqrt(0.25 / n));

  std::vector<double> obs(21), probs(21);
  for (Count m = 0; m <= 20; ++m) {
    obs[m] = static_cast<double>(rep.histogram[0][m]);
    probs[m] = std::pow(0.5, m) * 0.5;
  }
  probs[20] = std::pow(0.5, 20);  // n > 19 pooled
  obs[20] += static_cast<double>(rep.histogram[0][21]);
  CHECK(chi2_pvalue(obs, probs, n) > 0.01);
}

TEST_CASE("Fermi-Dirac and Gentile draws") {
  constexpr std::size_t n = 100000;
  const auto fd = sample_batch(EnsembleKind::fermi_dirac(), QVector::positive({0.4, 3.0}), kSeed + 1, n);
  for (const auto& d : fd) CHECK((d[0] <= 1 && d[1] <= 1));
  const double m1 = 3.0 / 4.0;
  CHECK(std::fabs(sample_mean(fd, 1) - m1) < 3 * std::sqrt(m1 * (1 - m1) / n));

  // Truncated geometric with cap 3: mean and variance by enumerating weights.
  const double q = 0.9;
  double z = 0, m = 0, m2 = 0, w = 1;
  for (int k = 0; k <= 3; ++k, w *= q) {
    z += w;
    m += k * w;
    m2 += k * k * w;
  }
  const double mean = m / z, var = m2 / z - mean * mean;
  CHECK(mean == doctest::Approx(mean_occupancy(EnsembleKind::gentile(3), q)).epsilon(1e-14));
  const auto g = sample_batch(EnsembleKind::gentile(3), QVector::positive({q}), kSeed + 2, n);
  CHECK(std::fabs(sample_mean(g, 0) - mean) < 3 * std::sqrt(var / n));
}

TEST_CASE("batches do not depend on the thread count") {
  const auto q = QVector::bose({0.3, 0.7});
  const std::size_t n = 3 * kBlockSize + 17;
  const auto one = sample_batch(kBE, q, kSeed, n, 1);
  const auto four = sample_batch(kBE, q, kSeed, n, 4);
  CHECK(one.size() == n);
  CHECK(one == four);
  CHECK(sample_batch(kBE, q, kSeed, 0).empty());
  CHECK_THROWS_AS(sample_batch(kBE, QVector::positive({1.5}), kSeed, 10), DomainError);
}

TEST_CASE("correlated draws") {
  constexpr std::size_t n = 100000;

  SUBCASE("independent case agrees with the product sampler") {
    const std::vector<double> qs = {0.5, 0.3};
    const CorrelatedParams ind(qs, qs, 1.0);
    SeededSource src(kSeed);
    std::map<std::pair<Count, Count>, double> a, b;
    for (std::size_t i = 0; i < n; ++i) {
      const auto d = sample_correlated(ind, src);
      a[{std::min<Count>(d[0], 6), std::min<Count>(d[1], 4)}] += 1;
    }
    for (const auto& d : sample_batch(kBE, QVector::bose(qs), kSeed + 3, n)) {
      b[{std::min<Count>(d[0], 6), std::min<Count>(d[1], 4)}] += 1;
    }
    // Two-sample homogeneity test on the clipped support.
    double stat = 0.0;
    int cells = 0;
    for (Count x = 0; x <= 6; ++x) {
      for (Count y = 0; y <= 4; ++y) {
        const double oa = a[{x, y}], ob = b[{x, y}];
        if (oa + ob == 0) continue;
        stat += (oa - ob) * (oa - ob) / (oa + ob);
        ++cells;
      }
    }
    CHECK(chi2_survival(stat, cells - 1) > 0.01);
  }

  SUBCASE("no-vacuum pair") {
    const CorrelatedParams p({0.5, 0.5}, {0.5, 0.5}, 4.0 / 3);
    SeededSource src(kSeed);
    std::vector<Occupancy> draws;
    draws.reserve(n);
    std::size_t vacuum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      draws.push_back(sample_correlated(p, src));
      if (draws.back().is_vacuum()) ++vacuum;
    }
    CHECK(static_cast<double>(vacuum) / n < 1e-4);

    const double m0 = sample_mean(draws, 0), m1 = sample_mean(draws, 1);
    CompensatedSum c, c2;
    for (const auto& d : draws) {
      const double x = (d[0] - m0) * (d[1] - m1);
      c += x;
      c2 += x * x;
    }
    const double cov = c.value() / (n - 1);
    const double se = std::sqrt((c2.value() / n - cov * cov) / n);
    CHECK(std::fabs(cov - (-4.0 / 9)) < 3 * se);

    const CorrelatedSampler sampler(p);
    CHECK(sampler.pattern_masses()[0] == 0.0);
  }

  std::vector<double> big(21, 0.5);
  CHECK_THROWS_AS(CorrelatedSampler(CorrelatedParams(big, big, 1.0)), BudgetError);
}

TEST_CASE("birth-death chain") {
  const ChainSpec spec({0.5, 0.3, 0.8}, {1.0, 1.0, 2.0});
  CHECK(spec.q(2) == doctest::Approx(0.4));
  CHECK_THROWS_AS(ChainSpec({1.0}, {1.0}), DomainError);
  CHECK_THROWS_AS(ChainSpec({0.5, 0.5}, {1.0}), DomainError);
  CHECK_THROWS_AS(ChainSpec({-0.5}, {1.0}), DomainError);

  SUBCASE("from the vacuum only upward moves") {
    SeededSource src(kSeed);
    const auto zero = Occupancy::zeros(3);
    for (int i = 0; i < 1000; ++i) {
      const auto next = chain_step(zero, spec, src);
      CHECK(next.total() <= 1);
    }
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(transition_probability(spec, zero, zero.plus(j)) > 0.0);
    }
  }

  SUBCASE("detailed balance, exact") {
    auto pi = [&](const Occupancy& n) {
      double w = 1.0;
      for (std::size_t j = 0; j < 3; ++j) w *= std::pow(spec.q(j), n[j]);
      return w;
    };
    for (Count a = 0; a < 4; ++a) {
      for (Count b = 0; b < 4; ++b) {
        for (Count c = 0; c < 4; ++c) {
          const Occupancy n({a, b, c});
          for (std::size_t j = 0; j < 3; ++j) {
            const double fwd = pi(n) * transition_probability(spec, n, n.plus(j));
            const double bwd = pi(n.plus(j)) * transition_probability(spec, n.plus(j), n);
            CHECK(fwd == doctest::Approx(bwd).epsilon(1e-14));
          }
          double out = 0.0;
          for (std::size_t j = 0; j < 3; ++j) {
            out += transition_probability(spec, n, n.plus(j));
            if (n[j] > 0) out += transition_probability(spec, n, n.minus(j));
          }
          out += transition_probability(spec, n, n);
          CHECK(out == doctest::Approx(1.0).epsilon(1e-14));
        }
      }
    }
  }

  SUBCASE("the renormalized rule breaks detailed balance") {
    const ChainSpec bad({0.5, 0.3}, {1.0, 1.0}, ChainMoves::Renormalized);
    const Occupancy n({0, 0});
    const double fwd = transition_probability(bad, n, n.plus(0));
    const double bwd = bad.q(0) * transition_probability(bad, n.plus(0), n);
    CHECK(std::fabs(fwd - bwd) > 1e-3);
  }

  SUBCASE("long run matches the geometric means") {
    SeededSource src(kSeed);
    const auto path = run_chain(spec, Occupancy::zeros(3), 10000, 1000000, src);
    REQUIRE(path.size() == 1000000);
    EmpiricalOptions opt;
    opt.batches = 50;
    const auto rep = empirical_report(path, opt);
    CHECK(rep.batches == 50);
    for (std::size_t j = 0; j < 3; ++j) {
      const double target = spec.q(j) / (1 - spec.q(j));
      CHECK(std::fabs(rep.means[j] - target) < 3 * rep.standard_errors[j]);
    }
  }
}

TEST_CASE("empirical report") {
  const std::vector<Occupancy> constant(10, Occupancy({3, 1}));
  const auto c = empirical_report(constant);
  CHECK(c.means[0] == 3.0);
  CHECK(c.covariances(0, 0) == 0.0);
  CHECK(c.covariances(0, 1) == 0.0);
  CHECK(c.standard_errors[1] == 0.0);

  const std::vector<Occupancy> two = {Occupancy({0}), Occupancy({2})};
  const auto t = empirical_report(two);
  CHECK(t.means[0] == 1.0);
  CHECK(t.covariances(0, 0) == 2.0);
  CHECK(t.draws == 2);

  const std::vector<Occupancy> cut = {Occupancy({0}), Occupancy({5}), Occupancy({30})};
  EmpiricalOptions opt;
  opt.histogram_cutoff = 4;
  const auto h = empirical_report(cut, opt);
  REQUIRE(h.histogram[0].size() == 6);
  CHECK(h.histogram[0][0] == 1);
  CHECK(h.histogram[0][5] == 2);

  CHECK_THROWS_AS(empirical_report(std::vector<Occupancy>{Occupancy({1})}), DomainError);
  CHECK_THROWS_AS(empirical_report(std::vector<Occupancy>{Occupancy({1}), Occupancy({1, 2})}), DomainError);
  EmpiricalOptions one_batch;
  one_batch.batches = 1;
  CHECK_THROWS_AS(empirical_report(two, one_batch), DomainError);
}
