#include "partstat/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "partstat/error.hpp"
#include "partstat/summation.hpp"

namespace partstat {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double SeededSource::uniform_open() noexcept {
  double u = 0.0;
  while (u == 0.0) u = uniform01();
  return u;
}

SeededSource SeededSource::derive(std::uint64_t stream) const noexcept {
  return SeededSource(splitmix64(seed_ ^ splitmix64(stream)));
}

namespace {

Count to_count(double x) {
  if (!(x < static_cast<double>(std::numeric_limits<Count>::max()))) {
    throw RangeError("sampler: draw exceeds the occupancy range");
  }
  return static_cast<Count>(x);
}

void require_admissible(const EnsembleKind& kind, const QVector& q) {
  if (kind.needs_unit_interval() && !q.in_unit_interval()) {
    throw DomainError("sample_occupancy: " + kind.name() + " needs every q in (0,1)");
  }
}

}  // namespace

Count draw_geometric(double q, SeededSource& src) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("draw_geometric: q must lie in (0,1)");
  return to_count(std::floor(std::log(src.uniform_open()) / std::log(q)));
}

Count draw_bernoulli_fd(double q, SeededSource& src) {
  if (!(q > 0.0) || !std::isfinite(q)) throw DomainError("draw_bernoulli_fd: q must be positive");
  return src.uniform01() < q / (1.0 + q) ? 1 : 0;
}

Count draw_truncated_geometric(double q, Count cap, SeededSource& src) {
  if (!(q > 0.0) || !std::isfinite(q)) throw DomainError("draw_truncated_geometric: q must be positive");
  const double u = src.uniform01();
  double n;
  if (q == 1.0) {
    n = std::floor(u * (static_cast<double>(cap) + 1.0));
  } else {
    // P(X >= m) = (q^m - q^{K+1}) / (1 - q^{K+1}); X = floor(ln V / ln q) with
    // V = 1 - U (1 - q^{K+1}) has exactly this tail.
    const double log_q = std::log(q);
    const double c = -std::expm1((static_cast<double>(cap) + 1.0) * log_q);
    n = std::floor(std::log1p(-u * c) / log_q);
  }
  return static_cast<Count>(std::clamp(n, 0.0, static_cast<double>(cap)));
}

Occupancy sample_occupancy(const EnsembleKind& kind, const QVector& q, SeededSource& src) {
  require_admissible(kind, q);
  std::vector<Count> n(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) {
    switch (kind.tag()) {
      case EnsembleKind::Tag::BoseEinstein: n[j] = draw_geometric(q[j], src); break;
      case EnsembleKind::Tag::FermiDirac: n[j] = draw_bernoulli_fd(q[j], src); break;
      case EnsembleKind::Tag::Gentile: n[j] = draw_truncated_geometric(q[j], *kind.max_occupancy(), src); break;
    }
  }
  return Occupancy(std::move(n), kind.max_occupancy());
}

std::vector<Occupancy> sample_batch(const EnsembleKind& kind, const QVector& q, std::uint64_t seed,
                                    std::size_t count, unsigned threads) {
  require_admissible(kind, q);
  std::vector<Occupancy> out(count);
  const std::size_t blocks = (count + kBlockSize - 1) / kBlockSize;
  const SeededSource root(seed);
  auto work = [&](std::size_t first_block, std::size_t stride) {
    for (std::size_t b = first_block; b < blocks; b += stride) {
      SeededSource src = root.derive(b);
      const std::size_t end = std::min(count, (b + 1) * kBlockSize);
      for (std::size_t i = b * kBlockSize; i < end; ++i) out[i] = sample_occupancy(kind, q, src);
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(blocks, 1))));
  if (threads == 1) {
    work(0, 1);
    return out;
  }
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  pool.clear();
  return out;
}

CorrelatedSampler::CorrelatedSampler(const CorrelatedParams& params) : q_(params.q()) {
  const std::size_t k = params.size();
  if (k > kMaxStates) {
    throw BudgetError("CorrelatedSampler: k = " + std::to_string(k) + " exceeds the 2^k pattern budget (k <= " +
                      std::to_string(kMaxStates) + ")");
  }
  if (params.has_unit_q()) throw DomainError("CorrelatedSampler: q_j = 1 has no proper occupation law");
  const std::size_t patterns = std::size_t{1} << k;
  masses_.resize(patterns);
  cumulative_.resize(patterns);
  masses_[0] = params.vacuum_mass();
  for (std::size_t mask = 1; mask < patterns; ++mask) {
    double m = params.omega();
    for (std::size_t j = 0; j < k; ++j) m *= (mask >> j) & 1u ? params.q0()[j] : 1.0 - params.q0()[j];
    masses_[mask] = m;
  }
  CompensatedSum running;
  for (std::size_t mask = 0; mask < patterns; ++mask) {
    running += masses_[mask];
    cumulative_[mask] = running.value();
  }
}

Occupancy CorrelatedSampler::operator()(SeededSource& src) const {
  const double u = src.uniform01() * cumulative_.back();
  // upper_bound never lands on a zero-mass pattern: its cumulative value
  // equals its predecessor's.
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  const std::size_t mask = static_cast<std::size_t>(it - cumulative_.begin());
  std::vector<Count> n(q_.size(), 0);
  for (std::size_t j = 0; j < q_.size(); ++j) {
    if ((mask >> j) & 1u) n[j] = 1 + draw_geometric(q_[j], src);
  }
  return Occupancy(std::move(n));
}

Occupancy sample_correlated(const CorrelatedParams& params, SeededSource& src) {
  return CorrelatedSampler(params)(src);
}

ChainSpec::ChainSpec(std::vector<double> birth, std::vector<double> death, ChainMoves moves)
    : birth_(std::move(birth)), death_(std::move(death)), moves_(moves) {
  if (birth_.empty() || birth_.size() != death_.size()) {
    throw DomainError("ChainSpec: need equally many (>= 1) birth and death rates");
  }
  for (std::size_t j = 0; j < birth_.size(); ++j) {
    if (!(birth_[j] > 0.0) || !(death_[j] > 0.0) || !std::isfinite(birth_[j]) || !std::isfinite(death_[j])) {
      throw DomainError("ChainSpec: rates must be positive and finite");
    }
    if (!(birth_[j] < death_[j])) {
      std::ostringstream msg;
      msg << "ChainSpec: state " << j << " has q = birth/death = " << birth_[j] / death_[j]
          << " >= 1 (not positive recurrent)";
      throw DomainError(msg.str());
    }
  }
}

namespace {

double total_rate(const ChainSpec& spec, const Occupancy& state) {
  double total = 0.0;
  for (std::size_t j = 0; j < spec.size(); ++j) {
    total += spec.birth()[j];
    if (spec.moves() == ChainMoves::Uniformized || state[j] > 0) total += spec.death()[j];
  }
  return total;
}

void require_chain_state(const ChainSpec& spec, const Occupancy& state) {
  if (state.size() != spec.size()) throw DomainError("chain: state dimension does not match the chain");
}

}  // namespace

Occupancy chain_step(const Occupancy& state, const ChainSpec& spec, SeededSource& src) {
  require_chain_state(spec, state);
  const double total = total_rate(spec, state);
  double u = src.uniform01() * total;
  for (std::size_t j = 0; j < spec.size(); ++j) {
    if (u < spec.birth()[j]) return state.plus(j);
    u -= spec.birth()[j];
    const bool legal_down = state[j] > 0;
    if (spec.moves() == ChainMoves::Uniformized || legal_down) {
      if (u < spec.death()[j]) return legal_down ? state.minus(j) : state;
      u -= spec.death()[j];
    }
  }
  // rounding pushed u past the last rate
  return state;
}

double transition_probability(const ChainSpec& spec, const Occupancy& from, const Occupancy& to) {
  require_chain_state(spec, from);
  require_chain_state(spec, to);
  const double total = total_rate(spec, from);
  if (from == to) {
    if (spec.moves() == ChainMoves::Renormalized) return 0.0;
    double stay = 0.0;
    for (std::size_t j = 0; j < spec.size(); ++j) {
      if (from[j] == 0) stay += spec.death()[j];
    }
    return stay / total;
  }
  std::size_t changed = spec.size();
  for (std::size_t j = 0; j < spec.size(); ++j) {
    if (from[j] == to[j]) continue;
    if (changed != spec.size()) return 0.0;
    changed = j;
  }
  if (to[changed] == from[changed] + 1) return spec.birth()[changed] / total;
  if (to[changed] + 1 == from[changed]) return spec.death()[changed] / total;
  return 0.0;
}

std::vector<Occupancy> run_chain(const ChainSpec& spec, Occupancy start, std::size_t burn_in, std::size_t steps,
                                 SeededSource& src) {
  require_chain_state(spec, start);
  for (std::size_t s = 0; s < burn_in; ++s) start = chain_step(start, spec, src);
  std::vector<Occupancy> path;
  path.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    start = chain_step(start, spec, src);
    path.push_back(start);
  }
  return path;
}

EmpiricalReport empirical_report(std::span<const Occupancy> draws, const EmpiricalOptions& options) {
  if (draws.size() < 2) throw DomainError("empirical_report: need at least two draws");
  const std::size_t k = draws.front().size();
  for (const auto& d : draws) {
    if (d.size() != k) throw DomainError("empirical_report: draws have differing dimensions");
  }
  if (options.batches == 1 || options.batches > draws.size()) {
    throw DomainError("empirical_report: batch count must be 0 (i.i.d.) or in [2, draws]");
  }
  const double n = static_cast<double>(draws.size());
  EmpiricalReport r;
  r.draws = draws.size();
  r.means.assign(k, 0.0);
  r.covariances = SquareMatrix(k);
  r.standard_errors.assign(k, 0.0);
  r.histogram.assign(k, std::vector<std::uint64_t>(std::size_t{options.histogram_cutoff} + 2, 0));
  r.batches = options.batches;

  for (std::size_t j = 0; j < k; ++j) {
    CompensatedSum s;
    for (const auto& d : draws) {
      s += d[j];
      const std::size_t cell = std::min<std::size_t>(d[j], std::size_t{options.histogram_cutoff} + 1);
      ++r.histogram[j][cell];
    }
    r.means[j] = s.value() / n;
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      CompensatedSum s;
      for (const auto& d : draws) s += (d[i] - r.means[i]) * (d[j] - r.means[j]);
      r.covariances(i, j) = r.covariances(j, i) = s.value() / (n - 1.0);
    }
  }
  if (options.batches == 0) {
    for (std::size_t j = 0; j < k; ++j) r.standard_errors[j] = std::sqrt(r.covariances(j, j) / n);
  } else {
    const std::size_t b = options.batches;
    const std::size_t size = draws.size() / b;  // trailing remainder is dropped
    for (std::size_t j = 0; j < k; ++j) {
      std::vector<double> batch_means(b);
      for (std::size_t t = 0; t < b; ++t) {
        CompensatedSum s;
        for (std::size_t i = t * size; i < (t + 1) * size; ++i) s += draws[i][j];
        batch_means[t] = s.value() / static_cast<double>(size);
      }
      CompensatedSum mean;
      for (double m : batch_means) mean += m;
      const double grand = mean.value() / static_cast<double>(b);
      CompensatedSum var;
      for (double m : batch_means) var += (m - grand) * (m - grand);
      r.standard_errors[j] = std::sqrt(var.value() / static_cast<double>(b - 1) / static_cast<double>(b));
    }
  }
  return r;
}

}  // namespace partstat
