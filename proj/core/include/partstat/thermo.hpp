#pragma once

#include <optional>
#include <span>

#include "partstat/types.hpp"

namespace partstat {

/// Mean of the geometric law P(n) = q^n (1-q): q / (1-q). Requires 0 < q < 1.
double mean_from_q(double q);

/// Inverse of mean_from_q: 1 / (1/N + 1). Requires N > 0.
double q_from_mean(double mean);

/// A ratio q = exp(beta * (c - eps)) together with whether it is usable by a
/// geometric (Bose-Einstein) law, i.e. lies strictly inside (0,1).
struct ThermoRatio {
  double q;
  bool bose_admissible;
};

/// q = exp(beta (mu - eps)). Throws RangeError when the exponential is not
/// representable as a positive finite double.
ThermoRatio q_thermo(const ThermoParams& params, double eps);

/// q = exp(beta ((nu, u) - eps)); `params.nu()` must be present with the
/// dimension of `u`. With m = 1, u = (1) and nu = (mu) this is q_thermo.
ThermoRatio q_thermo_generalized(const ThermoParams& params, double eps, std::span<const double> u);

/// q_j for every level. Uses the generalized form when the levels carry
/// charges and params carry nu, the plain form otherwise. The vector's regime
/// is UnitInterval when every ratio is Bose-admissible, Positive otherwise.
QVector q_vector(const ThermoParams& params, const LevelSystem& levels);

/// Entropy (nats) of the geometric law with ratio q in (0,1):
/// -ln(1-q) - q/(1-q) ln q.
double entropy_geometric(double q);

/// Binary entropy -a ln a - (1-a) ln(1-a), with 0 ln 0 = 0. Requires a in [0,1].
double entropy_bernoulli(double a);

/// Grand potential of the subsystem of particles in one state, as a function
/// of its ratio q:
///
///   Phi(q) = (eps - c) q/(1-q) - T * S_geom(q),
///
/// with c = mu, or c = (nu, u) when `u` is given. Its unique stationary point
/// in q is q_thermo(params, eps) (resp. the generalized ratio).
double grand_potential(double q, const ThermoParams& params, double eps,
                       std::optional<std::span<const double>> u = std::nullopt);

}  // namespace partstat
