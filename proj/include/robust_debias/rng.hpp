#pragma once

#include <cstdint>
#include <random>

namespace robust_debias {

// Seeded RNG with hand-rolled distributions so that streams are bit-identical
// across compilers and standard libraries (std::normal_distribution is not
// portable). Substreams derived from (master seed, stream index) let parallel
// workers draw independently of the execution schedule.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  static Rng substream(std::uint64_t master_seed, std::uint64_t stream);

  // Uniform on the open interval (0, 1).
  double uniform();
  // Standard normal via Box-Muller; the spare draw is cached.
  double normal();
  // tan(pi (u - 1/2)) with u uniform, i.e. standard Cauchy.
  double cauchy();
  // Student t with 2 degrees of freedom by its closed-form quantile.
  double student_t2();
  // +1 or -1 with equal probability.
  double rademacher();
  bool bernoulli(double p);

  std::uint64_t next_u64() { return gen_(); }

private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 finalizer used for seeding substreams.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace robust_debias
