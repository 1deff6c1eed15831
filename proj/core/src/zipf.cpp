#include "dmsync/zipf.hpp"

#include <cmath>
#include <stdexcept>

namespace dmsync {

namespace {

// log1p(x)/x and expm1(x)/x, with series near zero.
double helper1(double x) {
  if (std::abs(x) > 1e-8) return std::log1p(x) / x;
  return 1.0 - x * (0.5 - x * (1.0 / 3.0 - 0.25 * x));
}

double helper2(double x) {
  if (std::abs(x) > 1e-8) return std::expm1(x) / x;
  return 1.0 + x * 0.5 * (1.0 + x * (1.0 / 3.0) * (1.0 + 0.25 * x));
}

}  // namespace

ZipfGenerator::ZipfGenerator(std::uint64_t n, double theta, std::uint64_t seed) : n_(n), theta_(theta), rng_(seed) {
  if (n == 0) throw std::invalid_argument("zipf: n must be >= 1");
  if (!(theta >= 0.0) || !std::isfinite(theta)) throw std::invalid_argument("zipf: theta must be >= 0");
  h_integral_x1_ = h_integral(1.5) - 1.0;
  h_integral_n_ = h_integral(static_cast<double>(n) + 0.5);
  s_ = 2.0 - h_integral_inverse(h_integral(2.5) - h(2.0));
}

double ZipfGenerator::h(double x) const { return std::exp(-theta_ * std::log(x)); }

double ZipfGenerator::h_integral(double x) const {
  const double log_x = std::log(x);
  return helper2((1.0 - theta_) * log_x) * log_x;
}

double ZipfGenerator::h_integral_inverse(double x) const {
  double t = x * (1.0 - theta_);
  if (t < -1.0) t = -1.0;  // guard against rounding past the pole
  return std::exp(helper1(t) * x);
}

std::uint64_t ZipfGenerator::next_rank() {
  if (n_ == 1) return 1;
  for (;;) {
    const double u = h_integral_n_ + unit_(rng_) * (h_integral_x1_ - h_integral_n_);
    const double x = h_integral_inverse(u);
    auto k = static_cast<std::int64_t>(x + 0.5);
    if (k < 1)
      k = 1;
    else if (static_cast<std::uint64_t>(k) > n_)
      k = static_cast<std::int64_t>(n_);
    const double kd = static_cast<double>(k);
    if (kd - x <= s_ || u >= h_integral(kd + 0.5) - h(kd)) return static_cast<std::uint64_t>(k);
  }
}

std::uint64_t ZipfGenerator::next() { return next_rank() - 1; }

}  // namespace dmsync
