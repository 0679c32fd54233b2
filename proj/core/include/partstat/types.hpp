#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace partstat {

using Count = std::uint32_t;

/// The k single-particle states: energies and, optionally, a per-particle
/// charge vector (magnetization, particle number, ...) of common dimension m.
class LevelSystem {
 public:
  explicit LevelSystem(std::vector<double> energies);
  LevelSystem(std::vector<double> energies, std::vector<std::vector<double>> charges);

  std::size_t size() const noexcept { return energies_.size(); }
  std::span<const double> energies() const noexcept { return energies_; }
  double energy(std::size_t j) const { return energies_.at(j); }

  bool has_charges() const noexcept { return !charges_.empty(); }
  std::size_t charge_dim() const noexcept { return has_charges() ? charges_.front().size() : 0; }
  std::span<const double> charge(std::size_t j) const { return charges_.at(j); }

  double min_energy() const noexcept;

 private:
  std::vector<double> energies_;
  std::vector<std::vector<double>> charges_;
};

/// Inverse temperature, chemical potential and optional generalized intensive
/// variables. k_B = 1 throughout.
class ThermoParams {
 public:
  ThermoParams(double beta, double mu);
  ThermoParams(double beta, double mu, std::vector<double> nu);

  double beta() const noexcept { return beta_; }
  double temperature() const noexcept { return 1.0 / beta_; }
  double mu() const noexcept { return mu_; }
  const std::optional<std::vector<double>>& nu() const noexcept { return nu_; }

  // Throws DomainError when nu is present and its dimension differs from the
  // charge dimension of `levels`.
  void check_compatible(const LevelSystem& levels) const;

 private:
  double beta_;
  double mu_;
  std::optional<std::vector<double>> nu_;
};

enum class QRegime {
  UnitInterval,  // every q_j in (0,1): geometric laws are normalizable
  Positive,      // every q_j in (0,inf): only Bernoulli / truncated laws
};

/// Per-state ratios q_j parametrizing the product occupancy laws.
class QVector {
 public:
  QVector(std::vector<double> q, QRegime regime);

  static QVector bose(std::vector<double> q) { return QVector(std::move(q), QRegime::UnitInterval); }
  static QVector positive(std::vector<double> q) { return QVector(std::move(q), QRegime::Positive); }

  std::size_t size() const noexcept { return q_.size(); }
  double operator[](std::size_t j) const noexcept { return q_[j]; }
  std::span<const double> values() const noexcept { return q_; }
  QRegime regime() const noexcept { return regime_; }

  // True when every value lies in (0,1), regardless of the recorded regime.
  bool in_unit_interval() const noexcept;

 private:
  std::vector<double> q_;
  QRegime regime_;
};

/// Occupation numbers (n_1, ..., n_k), optionally capped at K.
class Occupancy {
 public:
  Occupancy() = default;
  explicit Occupancy(std::vector<Count> n, std::optional<Count> cap = std::nullopt);

  static Occupancy zeros(std::size_t k) { return Occupancy(std::vector<Count>(k, 0)); }

  std::size_t size() const noexcept { return n_.size(); }
  Count operator[](std::size_t j) const noexcept { return n_[j]; }
  std::span<const Count> counts() const noexcept { return n_; }
  const std::optional<Count>& cap() const noexcept { return cap_; }

  std::uint64_t total() const noexcept;
  bool is_vacuum() const noexcept;

  // n + e_j and n - e_j; `minus` throws DomainError when n_j == 0, `plus`
  // throws when it would break the cap.
  Occupancy plus(std::size_t j) const;
  Occupancy minus(std::size_t j) const;

  std::string to_string() const;

  friend bool operator==(const Occupancy& a, const Occupancy& b) noexcept { return a.n_ == b.n_; }
  friend auto operator<=>(const Occupancy& a, const Occupancy& b) noexcept { return a.n_ <=> b.n_; }

 private:
  std::vector<Count> n_;
  std::optional<Count> cap_;
};

/// Dense row-major k x k matrix, enough for covariance results.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

}  // namespace partstat
