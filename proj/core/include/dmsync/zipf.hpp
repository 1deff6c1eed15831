#pragma once

#include <cstdint>
#include <random>

namespace dmsync {

/// Zipfian key generator. Rank r in [1, n] is drawn with probability
/// proportional to r^-theta; key = r - 1, so key 0 is the hottest.
///
/// Uses rejection-inversion sampling (Hormann & Derflinger), which is exact
/// for any theta >= 0 and needs no O(n) zeta table.
class ZipfGenerator {
 public:
  ZipfGenerator(std::uint64_t n, double theta, std::uint64_t seed);

  std::uint64_t next();
  std::uint64_t next_rank();

  std::uint64_t n() const { return n_; }
  double theta() const { return theta_; }

 private:
  double h(double x) const;
  double h_integral(double x) const;
  double h_integral_inverse(double x) const;

  std::uint64_t n_;
  double theta_;
  double h_integral_x1_;
  double h_integral_n_;
  double s_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace dmsync
