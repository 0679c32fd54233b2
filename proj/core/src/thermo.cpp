#include "partstat/thermo.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "partstat/error.hpp"

namespace partstat {
namespace {

void require_open_unit(double q, const char* where) {
  if (!(q > 0.0 && q < 1.0)) {
    std::ostringstream msg;
    msg << where << ": q = " << q << " outside (0,1)";
    throw DomainError(msg.str());
  }
}

ThermoRatio ratio_from_exponent(double exponent, const char* where) {
  const double q = std::exp(exponent);
  if (!std::isfinite(q)) {
    std::ostringstream msg;
    msg << where << ": exp(" << exponent << ") overflows";
    throw RangeError(msg.str());
  }
  if (q == 0.0) {
    std::ostringstream msg;
    msg << where << ": exp(" << exponent << ") underflows to zero";
    throw RangeError(msg.str());
  }
  return ThermoRatio{q, q < 1.0};
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double intensive_coupling(const ThermoParams& params, std::optional<std::span<const double>> u,
                          const char* where) {
  if (!u) return params.mu();
  if (!params.nu()) {
    throw DomainError(std::string(where) + ": charge vector given but params carry no nu");
  }
  if (params.nu()->size() != u->size()) {
    throw DomainError(std::string(where) + ": nu has dimension " + std::to_string(params.nu()->size()) +
                      ", u has dimension " + std::to_string(u->size()));
  }
  return dot(*params.nu(), *u);
}

}  // namespace

double mean_from_q(double q) {
  require_open_unit(q, "mean_from_q");
  return q / (1.0 - q);
}

double q_from_mean(double mean) {
  if (!(mean > 0.0) || !std::isfinite(mean)) {
    std::ostringstream msg;
    msg << "q_from_mean: mean = " << mean << " must be positive and finite";
    throw DomainError(msg.str());
  }
  return 1.0 / (1.0 / mean + 1.0);
}

ThermoRatio q_thermo(const ThermoParams& params, double eps) {
  if (!std::isfinite(eps)) throw DomainError("q_thermo: energy must be finite");
  return ratio_from_exponent(params.beta() * (params.mu() - eps), "q_thermo");
}

ThermoRatio q_thermo_generalized(const ThermoParams& params, double eps, std::span<const double> u) {
  if (!std::isfinite(eps)) throw DomainError("q_thermo_generalized: energy must be finite");
  const double c = intensive_coupling(params, u, "q_thermo_generalized");
  return ratio_from_exponent(params.beta() * (c - eps), "q_thermo_generalized");
}

QVector q_vector(const ThermoParams& params, const LevelSystem& levels) {
  params.check_compatible(levels);
  const bool generalized = levels.has_charges() && params.nu().has_value();
  std::vector<double> q(levels.size());
  bool all_bose = true;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    const ThermoRatio r = generalized ? q_thermo_generalized(params, levels.energy(j), levels.charge(j))
                                      : q_thermo(params, levels.energy(j));
    q[j] = r.q;
    all_bose = all_bose && r.bose_admissible;
  }
  return QVector(std::move(q), all_bose ? QRegime::UnitInterval : QRegime::Positive);
}

double entropy_geometric(double q) {
  require_open_unit(q, "entropy_geometric");
  return -std::log1p(-q) - q / (1.0 - q) * std::log(q);
}

double entropy_bernoulli(double a) {
  if (!(a >= 0.0 && a <= 1.0)) {
    std::ostringstream msg;
    msg << "entropy_bernoulli: a = " << a << " outside [0,1]";
    throw DomainError(msg.str());
  }
  double s = 0.0;
  if (a > 0.0) s -= a * std::log(a);
  if (a < 1.0) s -= (1.0 - a) * std::log1p(-a);
  return s;
}

double grand_potential(double q, const ThermoParams& params, double eps,
                       std::optional<std::span<const double>> u) {
  require_open_unit(q, "grand_potential");
  const double c = intensive_coupling(params, u, "grand_potential");
  const double mean = q / (1.0 - q);
  return (eps - c) * mean - params.temperature() * entropy_geometric(q);
}

}  // namespace partstat
