#ifndef MGLAB_COMMON_HPP
#define MGLAB_COMMON_HPP

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mglab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an enumeration would exceed one of the configured size guards.
class GuardExceeded : public Error {
 public:
  GuardExceeded(std::string bound, std::size_t limit)
      : Error("guard exceeded: " + bound + " > " + std::to_string(limit)),
        bound_(std::move(bound)),
        limit_(limit) {}
  const std::string& bound() const { return bound_; }
  std::size_t limit() const { return limit_; }

 private:
  std::string bound_;
  std::size_t limit_;
};

/// A policy returned something that is not a probability distribution.
class PolicyFault : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

enum class Side { kMax, kMin };

inline const char* to_string(Side side) { return side == Side::kMax ? "max" : "min"; }

struct JointAction {
  int max = 0;
  int min = 0;
  friend bool operator==(const JointAction&, const JointAction&) = default;
};

/// Size limits for the exponential enumerations.
struct Guards {
  std::size_t history_nodes = 1'000'000;
  std::size_t cover_points = 1'000'000;
  std::size_t markov_candidates = 100'000;
  std::size_t frontier_entries = 200'000;

  /// Defaults, with MGLAB_GUARD_NODES overriding the history-node guard.
  static Guards from_env() {
    Guards g;
    if (const char* v = std::getenv("MGLAB_GUARD_NODES"); v != nullptr && *v != '\0') {
      char* end = nullptr;
      unsigned long long n = std::strtoull(v, &end, 10);
      if (end != nullptr && *end == '\0' && n > 0) g.history_nodes = static_cast<std::size_t>(n);
    }
    return g;
  }
};

using Rng = std::mt19937_64;

/// Uniform double in [0,1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Inverse-CDF draw from a probability vector. The last positive entry absorbs rounding.
inline std::size_t sample_index(std::span<const double> probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last = i;
    acc += probs[i];
    if (u < acc) return i;
  }
  return last;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Stream seed for a named component, so swapping one component leaves the others' draws intact.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  return splitmix64(master ^ fnv1a(label));
}

/// Incremental 64-bit structural hash used for canonical policy ids.
class StructuralHash {
 public:
  StructuralHash& add(std::uint64_t v) {
    state_ = splitmix64(state_ ^ v);
    return *this;
  }
  StructuralHash& add(double v) { return add(std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v)); }
  StructuralHash& add(int v) { return add(static_cast<std::uint64_t>(static_cast<std::int64_t>(v))); }
  StructuralHash& add(std::string_view s) { return add(fnv1a(s)); }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0x6a09e667f3bcc908ULL;
};

inline std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }
  double raw_sum() const { return sum_; }
  double compensation() const { return comp_; }
  void restore(double sum, double comp) {
    sum_ = sum;
    comp_ = comp;
  }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Checks a probability vector; returns an empty string when valid.
inline std::string distribution_problem(std::span<const double> p, double tol = 1e-9) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i]) || p[i] < -tol) {
      return "entry " + std::to_string(i) + " = " + std::to_string(p[i]);
    }
    total += p[i];
  }
  if (std::abs(total - 1.0) > tol) return "sum = " + std::to_string(total);
  return {};
}

/// Fills out with a Dirichlet(1) draw.
inline void random_distribution(std::span<double> out, Rng& rng) {
  double total = 0.0;
  for (double& p : out) {
    p = -std::log(1.0 - uniform01(rng));
    total += p;
  }
  for (double& p : out) p /= total;
}

}  // namespace mglab

#endif  // MGLAB_COMMON_HPP
