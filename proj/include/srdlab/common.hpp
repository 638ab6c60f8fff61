#pragma once
// Shared error types and small numeric helpers.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace srd {

inline constexpr const char* kVersion = "0.1.0";

// malformed model/scheme/experiment description
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// argument outside an operation's domain
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// trajectory left the finite range
struct BlowUpError : std::runtime_error {
  double t_fail;
  double last_norm;  // last finite l2 norm before failure
  BlowUpError(double t, double nrm)
      : std::runtime_error("trajectory blew up at t = " + std::to_string(t) +
                           ", last finite l2 norm " + std::to_string(nrm)),
        t_fail(t), last_norm(nrm) {}
};

// Neumaier compensated running sum
struct CompensatedSum {
  double s = 0.0;
  double c = 0.0;
  void add(double x) {
    double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

inline double sqr(double x) { return x * x; }

// running moments with compensated power sums; merge order must be fixed by
// the caller for bit reproducibility
struct RunningMoments {
  std::uint64_t n = 0;
  CompensatedSum s1, s2, s3, s4;
  double mn = 0.0, mx = 0.0;

  void add(double x) {
    if (n == 0) {
      mn = mx = x;
    } else {
      mn = std::min(mn, x);
      mx = std::max(mx, x);
    }
    ++n;
    double x2 = x * x;
    s1.add(x);
    s2.add(x2);
    s3.add(x2 * x);
    s4.add(x2 * x2);
  }
  void merge(const RunningMoments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      mn = o.mn;
      mx = o.mx;
    } else {
      mn = std::min(mn, o.mn);
      mx = std::max(mx, o.mx);
    }
    n += o.n;
    s1.add(o.s1.value());
    s2.add(o.s2.value());
    s3.add(o.s3.value());
    s4.add(o.s4.value());
  }
  double mean() const { return n ? s1.value() / static_cast<double>(n) : 0.0; }
  double variance() const {
    if (n < 2) return 0.0;
    double m = mean();
    double v = (s2.value() - static_cast<double>(n) * m * m) /
               static_cast<double>(n - 1);
    return v > 0.0 ? v : 0.0;
  }
  double stderror() const {
    return n < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(n));
  }
  // excess kurtosis from raw power sums
  double excess_kurtosis() const {
    if (n < 4) return 0.0;
    double m = mean();
    double nn = static_cast<double>(n);
    double m2 = s2.value() / nn - m * m;
    if (m2 <= 0.0) return 0.0;
    double m4 = (s4.value() - 4.0 * m * s3.value() + 6.0 * m * m * s2.value()) / nn -
                3.0 * m * m * m * m;
    return m4 / (m2 * m2) - 3.0;
  }
};

}  // namespace srd
