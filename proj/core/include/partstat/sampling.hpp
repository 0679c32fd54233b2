#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "partstat/correlated.hpp"
#include "partstat/ensembles.hpp"
#include "partstat/types.hpp"

namespace partstat {

/// Reproducible uniform source. The same seed always yields the same draw
/// sequence on every platform: the engine is std::mt19937_64, whose output
/// the standard pins down, and uniforms are formed from its top 53 bits
/// without going through std::uniform_real_distribution.
class SeededSource {
 public:
  explicit SeededSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  static constexpr std::string_view algorithm() noexcept { return "mt19937_64"; }

  // Uniform on [0,1) with 53 random bits.
  double uniform01() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform on (0,1).
  double uniform_open() noexcept;

  /// Independent stream number `stream` of this seed:
  /// seed' = splitmix64(seed ^ splitmix64(stream)).
  SeededSource derive(std::uint64_t stream) const noexcept;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// P(n) = q^n (1-q), n >= 0, via floor(ln U / ln q).
Count draw_geometric(double q, SeededSource& src);
/// P(1) = q / (1+q).
Count draw_bernoulli_fd(double q, SeededSource& src);
/// P(n) proportional to q^n on {0, ..., cap}, by inverting the closed-form CDF.
Count draw_truncated_geometric(double q, Count cap, SeededSource& src);

/// One exact draw of the product law of `kind`.
Occupancy sample_occupancy(const EnsembleKind& kind, const QVector& q, SeededSource& src);

/// `count` draws split into blocks of `kBlockSize`; block b is drawn from
/// SeededSource(seed).derive(b). The result does not depend on `threads`.
std::vector<Occupancy> sample_batch(const EnsembleKind& kind, const QVector& q, std::uint64_t seed,
                                    std::size_t count, unsigned threads = 1);
inline constexpr std::size_t kBlockSize = 4096;

/// Two-stage exact sampler for the correlated family: pick the set of
/// occupied states from its 2^k masses, then draw each occupied n_j as
/// 1 + Geom(q_j).
class CorrelatedSampler {
 public:
  static constexpr std::size_t kMaxStates = 20;

  explicit CorrelatedSampler(const CorrelatedParams& params);

  Occupancy operator()(SeededSource& src) const;
  // Mass of each occupancy pattern, indexed by bitmask (bit j = state j occupied).
  std::span<const double> pattern_masses() const noexcept { return masses_; }

 private:
  std::vector<double> q_;
  std::vector<double> masses_;
  std::vector<double> cumulative_;
};

Occupancy sample_correlated(const CorrelatedParams& params, SeededSource& src);

/// How a move is picked in the birth-death chain.
enum class ChainMoves {
  // Coordinate j goes up with probability b_j / L and down with d_j / L,
  // L = sum_j (b_j + d_j); a down-move at n_j = 0 leaves the state unchanged.
  Uniformized,
  // Pick among the currently legal moves with probability proportional to
  // their rates. Its stationary law is NOT the product geometric one.
  Renormalized,
};

/// Birth-death chain on occupation vectors with per-state rates.
class ChainSpec {
 public:
  ChainSpec(std::vector<double> birth, std::vector<double> death, ChainMoves moves = ChainMoves::Uniformized);

  std::size_t size() const noexcept { return birth_.size(); }
  std::span<const double> birth() const noexcept { return birth_; }
  std::span<const double> death() const noexcept { return death_; }
  ChainMoves moves() const noexcept { return moves_; }
  double q(std::size_t j) const { return birth_.at(j) / death_.at(j); }

 private:
  std::vector<double> birth_;
  std::vector<double> death_;
  ChainMoves moves_;
};

Occupancy chain_step(const Occupancy& state, const ChainSpec& spec, SeededSource& src);

/// One-step transition probability from `from` to `to` (0 unless `to` is
/// from +- e_j or from itself).
double transition_probability(const ChainSpec& spec, const Occupancy& from, const Occupancy& to);

/// Runs `burn_in` unrecorded steps, then records `steps` successive states.
std::vector<Occupancy> run_chain(const ChainSpec& spec, Occupancy start, std::size_t burn_in, std::size_t steps,
                                 SeededSource& src);

struct EmpiricalOptions {
  Count histogram_cutoff = 20;
  // 0: i.i.d. standard errors. >= 2: batch means over this many contiguous
  // batches (for correlated chain output).
  std::size_t batches = 0;
};

struct EmpiricalReport {
  std::size_t draws = 0;
  std::vector<double> means;
  SquareMatrix covariances;  // unbiased (n - 1)
  std::vector<double> standard_errors;
  // histogram[j][m]: draws with n_j = m for m <= cutoff; last cell counts n_j > cutoff.
  std::vector<std::vector<std::uint64_t>> histogram;
  std::size_t batches = 0;  // 0 when i.i.d. errors were used
};

/// Throws DomainError for fewer than two draws or ragged input.
EmpiricalReport empirical_report(std::span<const Occupancy> draws, const EmpiricalOptions& options = {});

}  // namespace partstat
