#include "partstat/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "partstat/error.hpp"

namespace partstat {

LevelSystem::LevelSystem(std::vector<double> energies) : energies_(std::move(energies)) {
  if (energies_.empty()) {
    throw DomainError("LevelSystem: need at least one level");
  }
  for (double e : energies_) {
    if (!std::isfinite(e)) {
      throw DomainError("LevelSystem: energies must be finite");
    }
  }
}

LevelSystem::LevelSystem(std::vector<double> energies, std::vector<std::vector<double>> charges)
    : LevelSystem(std::move(energies)) {
  if (charges.size() != energies_.size()) {
    throw DomainError("LevelSystem: " + std::to_string(charges.size()) + " charge vectors for " +
                      std::to_string(energies_.size()) + " levels");
  }
  const std::size_t m = charges.front().size();
  if (m == 0) {
    throw DomainError("LevelSystem: charge vectors must have dimension >= 1");
  }
  for (const auto& u : charges) {
    if (u.size() != m) {
      throw DomainError("LevelSystem: charge vectors have differing dimensions");
    }
    for (double x : u) {
      if (!std::isfinite(x)) throw DomainError("LevelSystem: charges must be finite");
    }
  }
  charges_ = std::move(charges);
}

double LevelSystem::min_energy() const noexcept {
  return *std::min_element(energies_.begin(), energies_.end());
}

ThermoParams::ThermoParams(double beta, double mu) : beta_(beta), mu_(mu) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw DomainError("ThermoParams: beta must be positive and finite");
  }
  if (!std::isfinite(mu)) {
    throw DomainError("ThermoParams: mu must be finite");
  }
}

ThermoParams::ThermoParams(double beta, double mu, std::vector<double> nu) : ThermoParams(beta, mu) {
  if (nu.empty()) {
    throw DomainError("ThermoParams: nu must have dimension >= 1 when given");
  }
  for (double x : nu) {
    if (!std::isfinite(x)) throw DomainError("ThermoParams: nu must be finite");
  }
  nu_ = std::move(nu);
}

void ThermoParams::check_compatible(const LevelSystem& levels) const {
  if (!nu_) return;
  if (!levels.has_charges()) {
    throw DomainError("ThermoParams: nu given but levels carry no charges");
  }
  if (nu_->size() != levels.charge_dim()) {
    throw DomainError("ThermoParams: nu has dimension " + std::to_string(nu_->size()) +
                      ", charges have dimension " + std::to_string(levels.charge_dim()));
  }
}

QVector::QVector(std::vector<double> q, QRegime regime) : q_(std::move(q)), regime_(regime) {
  if (q_.empty()) {
    throw DomainError("QVector: need at least one state");
  }
  for (std::size_t j = 0; j < q_.size(); ++j) {
    const double v = q_[j];
    const bool ok = regime_ == QRegime::UnitInterval ? (v > 0.0 && v < 1.0)
                                                     : (v > 0.0 && std::isfinite(v));
    if (!ok) {
      std::ostringstream msg;
      msg << "QVector: q[" << j << "] = " << v << " outside "
          << (regime_ == QRegime::UnitInterval ? "(0,1)" : "(0,inf)");
      throw DomainError(msg.str());
    }
  }
}

bool QVector::in_unit_interval() const noexcept {
  return std::all_of(q_.begin(), q_.end(), [](double v) { return v > 0.0 && v < 1.0; });
}

Occupancy::Occupancy(std::vector<Count> n, std::optional<Count> cap) : n_(std::move(n)), cap_(cap) {
  if (cap_) {
    if (*cap_ == 0) throw DomainError("Occupancy: cap must be positive");
    for (Count c : n_) {
      if (c > *cap_) {
        throw DomainError("Occupancy: occupation " + std::to_string(c) + " exceeds cap " +
                          std::to_string(*cap_));
      }
    }
  }
}

std::uint64_t Occupancy::total() const noexcept {
  return std::accumulate(n_.begin(), n_.end(), std::uint64_t{0});
}

bool Occupancy::is_vacuum() const noexcept {
  return std::all_of(n_.begin(), n_.end(), [](Count c) { return c == 0; });
}

Occupancy Occupancy::plus(std::size_t j) const {
  auto n = n_;
  ++n.at(j);
  return Occupancy(std::move(n), cap_);
}

Occupancy Occupancy::minus(std::size_t j) const {
  if (n_.at(j) == 0) throw DomainError("Occupancy: cannot remove a particle from an empty state");
  auto n = n_;
  --n[j];
  return Occupancy(std::move(n), cap_);
}

std::string Occupancy::to_string() const {
  std::string s = "(";
  for (std::size_t j = 0; j < n_.size(); ++j) {
    if (j) s += ",";
    s += std::to_string(n_[j]);
  }
  return s + ")";
}

}  // namespace partstat
