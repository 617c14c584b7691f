#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "whitekit/error.hpp"
#include "whitekit/matrix.hpp"
#include "whitekit/probes.hpp"

namespace whitekit {

/// SplitMix64. Integer state only, so streams are identical on every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in (0, 1], 53 random bits.
  double uniform_open_closed() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Standard normal draws by the Box-Muller transform, both outputs used.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return z;
    }
    const double u1 = rng_.uniform_open_closed();
    const double u2 = rng_.uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

 private:
  SplitMix64 rng_;
  std::optional<double> spare_;
};

enum class Pattern { Isotropic, CompleteCollapse, DimensionalCollapse, Correlated, BuriedSignal };

inline std::string_view to_string(Pattern p) {
  switch (p) {
    case Pattern::Isotropic: return "isotropic";
    case Pattern::CompleteCollapse: return "complete-collapse";
    case Pattern::DimensionalCollapse: return "dimensional-collapse";
    case Pattern::Correlated: return "correlated";
    case Pattern::BuriedSignal: return "buried-signal";
  }
  return "unknown";
}

inline Pattern parse_pattern(std::string_view name) {
  for (Pattern p : {Pattern::Isotropic, Pattern::CompleteCollapse, Pattern::DimensionalCollapse,
                    Pattern::Correlated, Pattern::BuriedSignal}) {
    if (name == to_string(p)) return p;
  }
  throw Error(ErrorKind::BadSpec, "unknown pattern '" + std::string(name) + "'");
}

struct SynthSpec {
  Pattern pattern = Pattern::Isotropic;
  std::size_t n = 100;
  std::size_t f = 16;
  std::size_t rank = 1;      // DimensionalCollapse
  double rho = 0.0;          // Correlated
  std::size_t num_classes = 2;
  std::uint64_t seed = 0;

  void validate() const {
    auto bad = [](const std::string& msg) { throw Error(ErrorKind::BadSpec, msg); };
    if (n < 2) bad("n must be >= 2");
    if (f < 1) bad("f must be >= 1");
    if (num_classes < 1) bad("num_classes must be >= 1");
    if (pattern == Pattern::DimensionalCollapse && (rank < 1 || rank > f)) {
      bad("rank " + std::to_string(rank) + " must be in [1, f=" + std::to_string(f) + "]");
    }
    if (pattern == Pattern::Correlated && !(rho >= 0.0 && rho < 1.0)) {
      bad("rho must be in [0, 1)");
    }
    if (pattern == Pattern::BuriedSignal && (f < 2 || num_classes < 2)) {
      bad("buried-signal needs f >= 2 and at least 2 classes");
    }
  }
};

// Buried-signal layout: column 0 carries the class signal, the next 3f/4
// columns carry one strongly correlated high-variance noise factor, the rest
// are unit noise.
inline constexpr double kBuriedMargin = 3.0;
inline constexpr double kBuriedClassStd = 0.5;
inline constexpr double kBuriedNoiseStd = 10.0;
inline constexpr double kBuriedNoiseRho = 0.9;

inline std::size_t buried_noise_columns(std::size_t f) { return std::max<std::size_t>(1, 3 * f / 4); }

namespace detail {

/// r x f matrix with orthonormal rows (two passes of modified Gram-Schmidt).
inline Matrix orthonormal_rows(std::size_t r, std::size_t f, GaussianSampler& gauss) {
  Matrix b(r, f);
  for (double& v : b.data()) v = gauss();
  for (std::size_t i = 0; i < r; ++i) {
    auto bi = b.row(i);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < i; ++j) {
        auto bj = b.row(j);
        double d = 0.0;
        for (std::size_t c = 0; c < f; ++c) d += bi[c] * bj[c];
        for (std::size_t c = 0; c < f; ++c) bi[c] -= d * bj[c];
      }
    }
    double norm = 0.0;
    for (double v : bi) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : bi) v /= norm;
  }
  return b;
}

}  // namespace detail

/// Deterministic per seed. Labels cycle 0..num_classes-1 over the rows.
inline LabeledEmbeddings generate(const SynthSpec& spec) {
  spec.validate();
  GaussianSampler gauss(spec.seed);
  const std::size_t n = spec.n;
  const std::size_t f = spec.f;

  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<Label>(i % spec.num_classes);

  Matrix x(n, f);
  switch (spec.pattern) {
    case Pattern::Isotropic:
      for (double& v : x.data()) v = gauss();
      break;

    case Pattern::CompleteCollapse: {
      std::vector<double> row(f);
      for (double& v : row) v = gauss();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < f; ++j) x(i, j) = row[j];
      break;
    }

    case Pattern::DimensionalCollapse: {
      Matrix g(n, spec.rank);
      for (double& v : g.data()) v = gauss();
      x = matmul(g, detail::orthonormal_rows(spec.rank, f, gauss));
      break;
    }

    case Pattern::Correlated: {
      const double shared = std::sqrt(spec.rho);
      const double own = std::sqrt(1.0 - spec.rho);
      for (std::size_t i = 0; i < n; ++i) {
        const double z0 = gauss();
        for (std::size_t j = 0; j < f; ++j) x(i, j) = shared * z0 + own * gauss();
      }
      break;
    }

    case Pattern::BuriedSignal: {
      const std::size_t noisy = std::min(buried_noise_columns(f), f - 1);
      const double shared = kBuriedNoiseStd * std::sqrt(kBuriedNoiseRho);
      const double own = kBuriedNoiseStd * std::sqrt(1.0 - kBuriedNoiseRho);
      for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = kBuriedMargin * labels[i] + kBuriedClassStd * gauss();
        const double z0 = gauss();
        for (std::size_t j = 1; j <= noisy; ++j) x(i, j) = shared * z0 + own * gauss();
        for (std::size_t j = noisy + 1; j < f; ++j) x(i, j) = gauss();
      }
      break;
    }
  }
  return LabeledEmbeddings(std::move(x), std::move(labels), spec.num_classes);
}

}  // namespace whitekit
