// Seeded, replayable driving noise: Brownian increments and the Poisson
// random measures N0 (intensity ds m(dxi)) and N1 (intensity ds du mu(dxi)).
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "affine_lab/params.hpp"
#include "affine_lab/rng.hpp"

namespace affine_lab {

class NoiseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform grid on [0, t_max]; t_max must be an integer multiple of dt.
struct TimeGrid {
  double t_max = 1.0;
  double dt = 1.0 / 1024.0;

  std::size_t steps() const { return static_cast<std::size_t>(std::llround(t_max / dt)); }
  double time(std::size_t k) const { return static_cast<double>(k) * dt; }

  void check() const {
    if (!(dt > 0.0) || !(t_max > 0.0) || !std::isfinite(dt) || !std::isfinite(t_max))
      throw NoiseError("grid needs t_max > 0 and dt > 0");
    const double n = t_max / dt;
    if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n))
      throw NoiseError("t_max must be an integer multiple of dt");
  }

  /// Index of the grid point at time t, or npos when t is off-grid.
  std::size_t index_of(double t) const {
    const double n = t / dt;
    const double r = std::round(n);
    if (r < 0.0 || std::abs(n - r) > 1e-9 * std::max(1.0, n) || r > static_cast<double>(steps()))
      return npos;
    return static_cast<std::size_t>(r);
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

struct ImmigrationEvent {
  double time = 0.0;
  Point xi;
  friend bool operator==(const ImmigrationEvent&, const ImmigrationEvent&) = default;
};

struct BranchingEvent {
  double time = 0.0;
  double umark = 0.0;
  Point xi;
  friend bool operator==(const BranchingEvent&, const BranchingEvent&) = default;
};

namespace noise_streams {
inline constexpr std::uint64_t kBrownian = 0;
inline constexpr std::uint64_t kImmigration = 1;
inline constexpr std::uint64_t kBranchingLayer0 = 16;  // layers 16, 17, ...
inline constexpr std::uint64_t kBridgeLevel0 = 1024;   // refinement levels 1024, 1025, ...
}  // namespace noise_streams

/// Samples marks from the normalized restriction of a measure to {|xi| > eps}.
class MarkSampler {
 public:
  MarkSampler(const JumpMeasure& measure, double eps) : measure_(&measure), eps_(eps) {
    rate_ = mass_outside(measure, eps);
    if (!std::isfinite(rate_))
      throw NoiseError("jump measure has infinite mass outside eps; raise eps");
    if (measure.kind() == JumpMeasure::Kind::FiniteAtomic) {
      double acc = 0.0;
      for (std::size_t i = 0; i < measure.atoms().size(); ++i) {
        const Atom& a = measure.atoms()[i];
        if (!(a.xi.norm() > eps)) continue;
        acc += a.weight;
        cumulative_.push_back(acc);
        index_.push_back(i);
      }
    }
  }

  double rate() const { return rate_; }

  Point sample(CounterStream& rng) const {
    if (measure_->kind() == JumpMeasure::Kind::FiniteAtomic) {
      const double target = rng.uniform() * cumulative_.back();
      auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
      if (it == cumulative_.end()) --it;
      return measure_->atoms()[index_[static_cast<std::size_t>(it - cumulative_.begin())]].xi;
    }
    for (;;) {
      Point xi;
      xi.xi1 = rng.exponential(measure_->rate1());
      const bool positive = rng.uniform() < measure_->sign_mix();
      const double mag = rng.exponential(measure_->rate2());
      xi.xi2 = positive ? mag : -mag;
      if (xi.norm() > eps_) return xi;
    }
  }

 private:
  const JumpMeasure* measure_;
  double eps_;
  double rate_ = 0.0;
  std::vector<double> cumulative_;
  std::vector<std::size_t> index_;
};

/// Immutable bundle of driving noise on a uniform grid.
///
/// N1 candidates are generated in dyadic umark layers [0,1], [1,2], [2,4], ...
/// each from its own substream, then cut at u_bound. Regenerating with a larger
/// u_bound therefore keeps every candidate below the old bound.
class NoiseSystem {
 public:
  std::uint64_t seed() const { return seed_; }
  const TimeGrid& grid() const { return grid_; }
  int components() const { return components_; }
  double u_bound() const { return u_bound_; }
  double eps() const { return eps_; }
  int refinement() const { return refinement_; }
  std::size_t steps() const { return grid_.steps(); }

  /// Increments (dB_0, ..., dB_{r-1}) over step k, i.e. over [t_k, t_{k+1}].
  std::span<const double> increments(std::size_t k) const {
    return {brownian_.data() + k * static_cast<std::size_t>(components_),
            static_cast<std::size_t>(components_)};
  }
  const std::vector<double>& brownian() const { return brownian_; }

  const std::vector<ImmigrationEvent>& n0_events() const { return n0_; }
  const std::vector<BranchingEvent>& n1_events() const { return n1_; }

  /// Events with time in [t_k, t_{k+1}) (the last step also takes t_max).
  std::span<const ImmigrationEvent> n0_in_step(std::size_t k) const {
    return {n0_.data() + n0_offsets_[k], n0_offsets_[k + 1] - n0_offsets_[k]};
  }
  std::span<const BranchingEvent> n1_in_step(std::size_t k) const {
    return {n1_.data() + n1_offsets_[k], n1_offsets_[k + 1] - n1_offsets_[k]};
  }

  friend bool operator==(const NoiseSystem& a, const NoiseSystem& b) {
    return a.seed_ == b.seed_ && a.grid_ == b.grid_ && a.components_ == b.components_ &&
           a.u_bound_ == b.u_bound_ && a.eps_ == b.eps_ && a.refinement_ == b.refinement_ &&
           a.brownian_ == b.brownian_ && a.n0_ == b.n0_ && a.n1_ == b.n1_;
  }

  friend NoiseSystem generate_noise(const JumpMeasure& m, const JumpMeasure& mu, TimeGrid grid,
                                    std::uint64_t seed, double u_bound, double eps,
                                    int components);
  friend NoiseSystem refine(const NoiseSystem& coarse);
  friend void write_noise(std::ostream& os, const NoiseSystem& noise);
  friend NoiseSystem read_noise(std::istream& is);

 private:
  void index_events() {
    const std::size_t n = steps();
    auto step_of = [&](double t) {
      const auto k = static_cast<std::size_t>(std::floor(t / grid_.dt));
      return std::min(k, n - 1);
    };
    n0_offsets_.assign(n + 1, 0);
    n1_offsets_.assign(n + 1, 0);
    for (const auto& e : n0_) ++n0_offsets_[step_of(e.time) + 1];
    for (const auto& e : n1_) ++n1_offsets_[step_of(e.time) + 1];
    for (std::size_t k = 0; k < n; ++k) {
      n0_offsets_[k + 1] += n0_offsets_[k];
      n1_offsets_[k + 1] += n1_offsets_[k];
    }
  }

  std::uint64_t seed_ = 0;
  TimeGrid grid_;
  int components_ = 3;
  double u_bound_ = 1.0;
  double eps_ = 0.0;
  int refinement_ = 0;
  std::vector<double> brownian_;
  std::vector<ImmigrationEvent> n0_;
  std::vector<BranchingEvent> n1_;
  std::vector<std::size_t> n0_offsets_;
  std::vector<std::size_t> n1_offsets_;
};

/// Builds the noise for (m, mu) on `grid`. Deterministic in all arguments.
/// The effective small-jump cutoff of each measure is max(eps, truncation_eps).
inline NoiseSystem generate_noise(const JumpMeasure& m, const JumpMeasure& mu, TimeGrid grid,
                                  std::uint64_t seed, double u_bound, double eps,
                                  int components = 3) {
  grid.check();
  if (!(u_bound > 0.0) || !std::isfinite(u_bound)) throw NoiseError("u_bound must be > 0");
  if (!(eps >= 0.0)) throw NoiseError("eps must be >= 0");
  if (components < 1) throw NoiseError("need at least one Brownian component");

  NoiseSystem ns;
  ns.seed_ = seed;
  ns.grid_ = grid;
  ns.components_ = components;
  ns.u_bound_ = u_bound;
  ns.eps_ = eps;

  const std::size_t n = grid.steps();
  const auto r = static_cast<std::size_t>(components);
  const double sd = std::sqrt(grid.dt);
  const std::uint64_t bseed = substream_seed(seed, noise_streams::kBrownian);
  ns.brownian_.resize(n * r);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t lane = 0; 2 * lane < r; ++lane) {
      const auto z = normal_pair(bseed, k, lane);
      ns.brownian_[k * r + 2 * lane] = sd * z[0];
      if (2 * lane + 1 < r) ns.brownian_[k * r + 2 * lane + 1] = sd * z[1];
    }
  }

  const double t_max = grid.t_max;
  {
    const MarkSampler sampler(m, std::max(eps, m.truncation_eps()));
    if (sampler.rate() > 0.0) {
      CounterStream rng(substream_seed(seed, noise_streams::kImmigration), 0);
      for (double t = rng.exponential(sampler.rate()); t <= t_max;
           t += rng.exponential(sampler.rate()))
        ns.n0_.push_back({t, sampler.sample(rng)});
    }
  }
  {
    const MarkSampler sampler(mu, std::max(eps, mu.truncation_eps()));
    if (sampler.rate() > 0.0) {
      double lo = 0.0;
      double hi = 1.0;
      for (std::uint64_t layer = 0; lo < u_bound; ++layer) {
        const double rate = (hi - lo) * sampler.rate();
        CounterStream rng(substream_seed(seed, noise_streams::kBranchingLayer0 + layer), 0);
        for (double t = rng.exponential(rate); t <= t_max; t += rng.exponential(rate)) {
          const double umark = lo + (hi - lo) * rng.uniform();
          const Point xi = sampler.sample(rng);
          if (umark <= u_bound) ns.n1_.push_back({t, umark, xi});
        }
        lo = hi;
        hi *= 2.0;
      }
      std::stable_sort(ns.n1_.begin(), ns.n1_.end(),
                       [](const BranchingEvent& a, const BranchingEvent& b) {
                         return a.time < b.time;
                       });
    }
  }
  ns.index_events();
  return ns;
}

/// Halves dt. Each increment is split by a Brownian-bridge midpoint drawn from a
/// dedicated substream; the event lists are unchanged.
inline NoiseSystem refine(const NoiseSystem& coarse) {
  NoiseSystem fine = coarse;
  fine.grid_.dt = coarse.grid_.dt / 2.0;
  fine.refinement_ = coarse.refinement_ + 1;
  const std::size_t n = coarse.steps();
  const auto r = static_cast<std::size_t>(coarse.components_);
  const double half_sd = std::sqrt(coarse.grid_.dt) / 2.0;
  const std::uint64_t bridge_seed = substream_seed(
      coarse.seed_, noise_streams::kBridgeLevel0 + static_cast<std::uint64_t>(coarse.refinement_));
  fine.brownian_.assign(2 * n * r, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t lane = 0; 2 * lane < r; ++lane) {
      const auto z = normal_pair(bridge_seed, k, lane);
      for (std::size_t c = 2 * lane; c < std::min(2 * lane + 2, r); ++c) {
        const double total = coarse.brownian_[k * r + c];
        const double wiggle = half_sd * z[c - 2 * lane];
        fine.brownian_[(2 * k) * r + c] = total / 2.0 + wiggle;
        fine.brownian_[(2 * k + 1) * r + c] = total / 2.0 - wiggle;
      }
    }
  }
  fine.index_events();
  return fine;
}

namespace detail {

static_assert(std::endian::native == std::endian::little, "binary noise dumps assume little-endian");

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw NoiseError("truncated noise dump");
  return v;
}

}  // namespace detail

inline constexpr std::uint32_t kNoiseFormatVersion = 1;

/// Binary layout (little-endian): "AFLN", u32 version, u64 seed, f64 t_max, f64 dt,
/// u32 components, f64 u_bound, f64 eps, u32 refinement, u64 steps, u64 n0 count,
/// u64 n1 count, then increments, (time, xi1, xi2) per N0 event and
/// (time, umark, xi1, xi2) per N1 event, all f64.
inline void write_noise(std::ostream& os, const NoiseSystem& ns) {
  os.write("AFLN", 4);
  detail::put(os, kNoiseFormatVersion);
  detail::put(os, ns.seed_);
  detail::put(os, ns.grid_.t_max);
  detail::put(os, ns.grid_.dt);
  detail::put(os, static_cast<std::uint32_t>(ns.components_));
  detail::put(os, ns.u_bound_);
  detail::put(os, ns.eps_);
  detail::put(os, static_cast<std::uint32_t>(ns.refinement_));
  detail::put(os, static_cast<std::uint64_t>(ns.steps()));
  detail::put(os, static_cast<std::uint64_t>(ns.n0_.size()));
  detail::put(os, static_cast<std::uint64_t>(ns.n1_.size()));
  for (double v : ns.brownian_) detail::put(os, v);
  for (const auto& e : ns.n0_) {
    detail::put(os, e.time);
    detail::put(os, e.xi.xi1);
    detail::put(os, e.xi.xi2);
  }
  for (const auto& e : ns.n1_) {
    detail::put(os, e.time);
    detail::put(os, e.umark);
    detail::put(os, e.xi.xi1);
    detail::put(os, e.xi.xi2);
  }
}

inline NoiseSystem read_noise(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "AFLN", 4) != 0) throw NoiseError("not a noise dump (bad magic)");
  const auto version = detail::get<std::uint32_t>(is);
  if (version != kNoiseFormatVersion)
    throw NoiseError("unsupported noise dump version " + std::to_string(version));
  NoiseSystem ns;
  ns.seed_ = detail::get<std::uint64_t>(is);
  ns.grid_.t_max = detail::get<double>(is);
  ns.grid_.dt = detail::get<double>(is);
  ns.components_ = static_cast<int>(detail::get<std::uint32_t>(is));
  ns.u_bound_ = detail::get<double>(is);
  ns.eps_ = detail::get<double>(is);
  ns.refinement_ = static_cast<int>(detail::get<std::uint32_t>(is));
  const auto steps = detail::get<std::uint64_t>(is);
  const auto n0 = detail::get<std::uint64_t>(is);
  const auto n1 = detail::get<std::uint64_t>(is);
  if (steps != ns.grid_.steps()) throw NoiseError("noise dump grid/step mismatch");
  ns.brownian_.resize(steps * static_cast<std::uint64_t>(ns.components_));
  for (double& v : ns.brownian_) v = detail::get<double>(is);
  ns.n0_.resize(n0);
  for (auto& e : ns.n0_) {
    e.time = detail::get<double>(is);
    e.xi.xi1 = detail::get<double>(is);
    e.xi.xi2 = detail::get<double>(is);
  }
  ns.n1_.resize(n1);
  for (auto& e : ns.n1_) {
    e.time = detail::get<double>(is);
    e.umark = detail::get<double>(is);
    e.xi.xi1 = detail::get<double>(is);
    e.xi.xi2 = detail::get<double>(is);
  }
  ns.index_events();
  return ns;
}

}  // namespace affine_lab
