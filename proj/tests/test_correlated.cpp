#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "partstat/correlated.hpp"
#include "partstat/ensembles.hpp"
#include "partstat/error.hpp"
#include "partstat/summation.hpp"
#include "partstat/thermo.hpp"

using namespace partstat;

namespace {

const auto kBE = EnsembleKind::bose_einstein();

CorrelatedParams no_vacuum_pair() { return CorrelatedParams({0.5, 0.5}, {0.5, 0.5}, 4.0 / 3); }

// Independent geometric law on two states conditioned on leaving the vacuum,
// straight from the product masses.
double conditioned_be_mass(Count a, Count b) {
  if (a == 0 && b == 0) return 0.0;
  return joint_prob(kBE, QVector::bose({0.5, 0.5}), Occupancy({a, b})) / 0.75;
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(CorrelatedParams({0.5}, {0.5, 0.5}, 1.0), DomainError);
  CHECK_THROWS_AS(CorrelatedParams({0.5}, {0.5}, 0.0), DomainError);
  CHECK_THROWS_AS(CorrelatedParams({0.5}, {1.2}, 0.5), DomainError);
  CHECK_THROWS_AS(CorrelatedParams({0.5, 0.3}, {1.0, 0.2}, 1.1), DomainError);
  CHECK_NOTHROW(CorrelatedParams({0.5, 0.3}, {1.0, 0.2}, 1.0));
  CHECK_THROWS_AS(CorrelatedParams({1.0}, {0.5}, 1.0), DomainError);

  try {
    CorrelatedParams({0.5, 0.5}, {0.5, 0.5}, 1.5);
    FAIL("infeasible omega accepted");
  } catch (const DomainError& e) {
    // 1 / (1 - 1/4)
    CHECK(std::string(e.what()).find("1.3333333333333") != std::string::npos);
  }

  const CorrelatedParams unit({1.0, 0.5}, {0.5, 0.5}, 1.0, true);
  CHECK(unit.has_unit_q());
  CHECK(prob_corr(unit, Occupancy({3, 0})) == doctest::Approx(0.0));
  CHECK(prob_corr(unit, Occupancy({0, 1})) > 0.0);
  CHECK_THROWS_AS(moments_corr(unit), DomainError);
  CHECK_THROWS_AS(correlated_cutoffs(unit, 1e-12), DomainError);
}

TEST_CASE("tail probabilities") {
  const auto p = no_vacuum_pair();
  CHECK(tail_prob_corr(p, Occupancy({0, 0})) == 1.0);
  CHECK(tail_prob_corr(p, Occupancy({1, 1})) == doctest::Approx(1.0 / 3).epsilon(1e-15));

  const std::vector<double> q = {0.6, 0.3, 0.45};
  const CorrelatedParams ind(q, q, 1.0);
  const auto qv = QVector::bose(q);
  for (Count a = 0; a < 5; ++a) {
    for (Count b = 0; b < 5; ++b) {
      for (Count c = 0; c < 5; ++c) {
        const Occupancy n({a, b, c});
        CHECK(tail_prob_corr(ind, n) == doctest::Approx(tail_prob(kBE, qv, n)).epsilon(1e-14));
        CHECK(prob_corr(ind, n) == doctest::Approx(joint_prob(kBE, qv, n)).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("point masses") {
  const auto p = no_vacuum_pair();
  CHECK(p.vacuum_mass() == 0.0);
  CHECK(prob_corr(p, Occupancy({0, 0})) == 0.0);
  CHECK(prob_corr(p, Occupancy({1, 0})) == doctest::Approx(1.0 / 6).epsilon(1e-15));
  for (Count a = 0; a < 8; ++a) {
    for (Count b = 0; b < 8; ++b) {
      CHECK(prob_corr(p, Occupancy({a, b})) == doctest::Approx(conditioned_be_mass(a, b)).epsilon(1e-14));
    }
  }

  // Normalization on a box whose outside mass is below 1e-12.
  const CorrelatedParams c({0.6, 0.4, 0.3}, {0.5, 0.7, 0.2}, 0.8);
  CompensatedSum s;
  for (Count a = 0; a <= 60; ++a) {
    for (Count b = 0; b <= 40; ++b) {
      for (Count d = 0; d <= 30; ++d) s += prob_corr(c, Occupancy({a, b, d}));
    }
  }
  CHECK(std::fabs(s.value() - 1.0) < 1e-10);
}

TEST_CASE("moments") {
  const auto m = moments_corr(no_vacuum_pair());
  CHECK(m.means[0] == doctest::Approx(4.0 / 3).epsilon(1e-15));
  CHECK(m.covariances(0, 1) == doctest::Approx(-4.0 / 9).epsilon(1e-14));

  // Same numbers by summing the conditioned product law.
  CompensatedSum e1, e12, e11;
  for (Count a = 0; a <= 80; ++a) {
    for (Count b = 0; b <= 80; ++b) {
      const double w = conditioned_be_mass(a, b);
      e1 += a * w;
      e12 += double(a) * b * w;
      e11 += double(a) * a * w;
    }
  }
  CHECK(std::fabs(m.means[0] - e1.value()) < 1e-10);
  CHECK(std::fabs(m.pair_means(0, 1) - e12.value()) < 1e-10);
  CHECK(std::fabs(m.pair_means(0, 0) - e11.value()) < 1e-10);
  CHECK(std::fabs(m.covariances(0, 1) - (e12.value() - e1.value() * e1.value())) < 1e-10);

  const std::vector<double> q = {0.2, 0.5, 0.7};
  const auto ind = moments_corr(CorrelatedParams(q, q, 1.0));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(ind.means[i] == doctest::Approx(q[i] / (1 - q[i])).epsilon(1e-15));
    CHECK(ind.covariances(i, i) == doctest::Approx(q[i] / ((1 - q[i]) * (1 - q[i]))).epsilon(1e-13));
    for (std::size_t j = 0; j < 3; ++j) {
      if (i != j) CHECK(std::fabs(ind.covariances(i, j)) < 1e-15);
    }
  }
}

TEST_CASE("covariance sign follows omega") {
  const std::vector<double> q = {0.4, 0.6};
  const std::vector<double> q0 = {0.3, 0.5};
  const double bound = 1.0 / (1.0 - 0.7 * 0.5);
  for (double omega : {0.3, 0.7, 1.0, 1.2, bound}) {
    const auto m = moments_corr(CorrelatedParams(q, q0, omega));
    const double c = m.covariances(0, 1);
    if (omega < 1.0) CHECK(c > 0.0);
    if (omega == 1.0) CHECK(c == 0.0);
    if (omega > 1.0) CHECK(c < 0.0);
  }
}

TEST_CASE("conditioning on an empty level") {
  const std::vector<double> q = {0.4, 0.6};
  const auto same = condition_on_empty_level(CorrelatedParams(q, {0.3, 0.5}, 1.0), 1);
  CHECK(same.omega() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(same.size() == 1);

  const auto p = no_vacuum_pair();
  const auto c = condition_on_empty_level(p, 1);
  CHECK(c.omega() == doctest::Approx(2.0).epsilon(1e-15));
  // Refit from the conditioned law: P(n_1 = 0 | n_2 = 0) = 1 - omega' q_01.
  CompensatedSum row;
  for (Count a = 0; a <= 100; ++a) row += conditioned_be_mass(a, 0);
  const double p0 = conditioned_be_mass(0, 0) / row.value();
  CHECK((1.0 - p0) / 0.5 == doctest::Approx(2.0).epsilon(1e-12));

  CHECK_THROWS_AS(condition_on_empty_level(CorrelatedParams({0.5}, {0.5}, 1.0), 0), DomainError);
  CHECK_THROWS_AS(condition_on_empty_level(CorrelatedParams({0.5, 0.5}, {1.0, 0.5}, 1.0), 0), DomainError);

  // Two-step conditioning against conditioning the three-state law on both
  // levels at once by summation.
  const CorrelatedParams three({0.5, 0.4, 0.3}, {0.3, 0.2, 0.25}, 4.0 / 3);
  const auto two_step = condition_on_empty_level(condition_on_empty_level(three, 2), 1);
  CompensatedSum z;
  for (Count a = 0; a <= 80; ++a) z += prob_corr(three, Occupancy({a, 0, 0}));
  for (Count a = 0; a < 10; ++a) {
    const double direct = prob_corr(three, Occupancy({a, 0, 0})) / z.value();
    CHECK(prob_corr(two_step, Occupancy({a})) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("conditioning on leaving the vacuum") {
  CHECK(condition_no_vacuum(QVector::bose({0.5, 0.5})).omega() == doctest::Approx(4.0 / 3).epsilon(1e-15));

  const double q = 0.3;
  const auto one = condition_no_vacuum(QVector::bose({q}));
  CHECK(one.omega() == doctest::Approx(1.0 / q).epsilon(1e-15));
  CHECK(prob_corr(one, Occupancy({0})) == 0.0);
  for (Count n = 1; n < 12; ++n) {
    CHECK(prob_corr(one, Occupancy({n})) == doctest::Approx(std::pow(q, n - 1) * (1 - q)).epsilon(1e-14));
  }

  CHECK(condition_no_vacuum(QVector::bose({1.0 - 1e-12, 0.5})).omega() == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("marginal entropy decomposition") {
  const std::vector<double> q = {0.3, 0.8};
  const CorrelatedParams ind(q, q, 1.0);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(entropy_marginal_corr(ind, j) == doctest::Approx(entropy_geometric(q[j])).epsilon(1e-14));
  }

  const CorrelatedParams sure({0.5, 0.4}, {1.0, 0.5}, 1.0);
  CHECK(entropy_marginal_corr(sure, 0) == doctest::Approx(entropy_geometric(0.5)).epsilon(1e-15));

  // Marginal of n_1 under the no-vacuum pair, summed from the product masses.
  CompensatedSum s;
  for (Count a = 0; a <= 200; ++a) {
    CompensatedSum pa;
    for (Count b = 0; b <= 200; ++b) pa += conditioned_be_mass(a, b);
    const double p = pa.value();
    if (p > 0) s += -p * std::log(p);
  }
  CHECK(std::fabs(entropy_marginal_corr(no_vacuum_pair(), 0) - s.value()) < 1e-10);
}

TEST_CASE("mixing entropy gap") {
  const std::vector<double> q = {0.4, 0.7, 0.2};
  CHECK(std::fabs(mixing_entropy_gap(CorrelatedParams(q, q, 1.0))) < 1e-9);
  CHECK(std::fabs(mixing_entropy_gap(CorrelatedParams(q, {0.1, 0.5, 0.3}, 1.0))) < 1e-9);

  // Regression anchor, computed independently at 30 digits.
  const double gap = mixing_entropy_gap(no_vacuum_pair());
  CHECK(gap > 0.0);
  CHECK(std::fabs(gap - 0.174416047921515946) < 1e-9);

  const CorrelatedParams a({0.5, 0.4, 0.3}, {0.3, 0.2, 0.25}, 4.0 / 3);
  const CorrelatedParams b({0.3, 0.5, 0.4}, {0.25, 0.3, 0.2}, 4.0 / 3);
  CHECK(mixing_entropy_gap(a) == doctest::Approx(mixing_entropy_gap(b)).epsilon(1e-12));
  CHECK(mixing_entropy_gap(a) > 0.0);

  MixingGapOptions tiny;
  tiny.budget.max_terms = 10;
  CHECK_THROWS_AS(mixing_entropy_gap(a, tiny), BudgetError);
}

TEST_CASE("consistency of the tail table") {
  const std::vector<CorrelatedParams> cases = {
      no_vacuum_pair(),
      CorrelatedParams({0.6, 0.4, 0.3}, {0.5, 0.7, 0.2}, 0.8),
      CorrelatedParams({0.7, 0.4}, {0.3, 0.2}, 1.5),
  };
  for (const auto& p : cases) {
    const auto r = consistency_check(p, 6);
    CHECK(r.max_violation < 1e-12);
    CHECK(r.relations_checked > 0);
  }

  // With omega = 1 and q0 = q the table is the product tail.
  const std::vector<double> q = {0.5, 0.3};
  const CorrelatedParams ind(q, q, 1.0);
  const auto table = tabulate_tails(ind, 5);
  for (Count a = 0; a <= 5; ++a) {
    for (Count b = 0; b <= 5; ++b) {
      const Occupancy n({a, b});
      CHECK(table.at(n.counts()) == doctest::Approx(tail_prob(kBE, QVector::bose(q), n)).epsilon(1e-15));
    }
  }

  auto broken = tabulate_tails(cases[1], 6);
  const std::vector<Count> at = {2, 1, 3};
  broken.at(at) *= 1.0 + 1e-6;
  const auto r = consistency_check(cases[1], broken);
  CHECK(r.max_violation >= 1e-7);
}
