#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "reshi/error.hpp"

namespace reshi {

enum class ErrorDistribution { None, Normal, Exponential };

inline std::string_view to_string(ErrorDistribution d) {
  switch (d) {
    case ErrorDistribution::None: return "none";
    case ErrorDistribution::Normal: return "normal";
    case ErrorDistribution::Exponential: return "exponential";
  }
  return "none";
}

inline ErrorDistribution parse_distribution(std::string_view s) {
  if (s == "none") return ErrorDistribution::None;
  if (s == "normal") return ErrorDistribution::Normal;
  if (s == "exponential") return ErrorDistribution::Exponential;
  fail(ErrorCode::InvalidArgument, "unknown error distribution '" + std::string(s) + "'");
}

/// Relative noise applied to the runtimes a scheduler is shown:
///   r_p = r * (1 + s * x * err),  s = +-1 with equal probability,
///   x ~ N(1, 0.5) (sd 0.5) or x ~ Exp(1).
/// Billed runtimes are never affected.
struct PredictionErrorModel {
  ErrorDistribution distribution = ErrorDistribution::None;
  double err = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(err >= 0.0)) fail(ErrorCode::InvalidArgument, "err must be >= 0");
  }
  bool identity() const noexcept { return distribution == ErrorDistribution::None || err == 0.0; }
};

inline constexpr double kNormalErrorMean = 1.0;
inline constexpr double kNormalErrorStddev = 0.5;
inline constexpr double kExponentialErrorRate = 1.0;
inline constexpr double kPredictionFloor = 0.001;  // r_p >= floor * r

using Rng = std::mt19937_64;

struct ErrorSample {
  double magnitude = 0.0;  // x
  int sign = 1;            // s
};

inline ErrorSample sample_error(ErrorDistribution d, Rng& rng) {
  ErrorSample s;
  switch (d) {
    case ErrorDistribution::None: return s;
    case ErrorDistribution::Normal:
      s.magnitude = std::normal_distribution<double>(kNormalErrorMean, kNormalErrorStddev)(rng);
      break;
    case ErrorDistribution::Exponential:
      s.magnitude = std::exponential_distribution<double>(kExponentialErrorRate)(rng);
      break;
  }
  s.sign = std::bernoulli_distribution(0.5)(rng) ? 1 : -1;
  return s;
}

inline double apply_error(double r, double err, const ErrorSample& s) {
  if (!(r > 0.0)) fail(ErrorCode::NonPositiveRuntime, "true runtime must be positive, got " + std::to_string(r));
  if (err == 0.0) return r;
  return std::max(r * (1.0 + s.sign * s.magnitude * err), kPredictionFloor * r);
}

inline double inject_error(double r, const PredictionErrorModel& model, Rng& rng) {
  if (!(r > 0.0)) fail(ErrorCode::NonPositiveRuntime, "true runtime must be positive, got " + std::to_string(r));
  if (model.distribution == ErrorDistribution::None) return r;
  return apply_error(r, model.err, sample_error(model.distribution, rng));
}

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) { return mix64(base ^ mix64(salt)); }

constexpr std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace reshi
