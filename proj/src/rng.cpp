#include "robust_debias/rng.hpp"

#include <cmath>

namespace robust_debias {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::substream(std::uint64_t master_seed, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(master_seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

double Rng::uniform() {
  // 53-bit mantissa, shifted into the open interval.
  return (static_cast<double>(gen_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

double Rng::cauchy() {
  return std::tan(3.1415926535897932384626433832795 * (uniform() - 0.5));
}

double Rng::student_t2() {
  // F(x) = 1/2 (1 + x / sqrt(x^2 + 2)); inverse below.
  const double u = uniform();
  const double a = 2.0 * u - 1.0;
  return a * std::sqrt(2.0 / (4.0 * u * (1.0 - u)));
}

double Rng::rademacher() {
  return (gen_() & 1ULL) ? 1.0 : -1.0;
}

bool Rng::bernoulli(double p) {
  return uniform() < p;
}

}  // namespace robust_debias
