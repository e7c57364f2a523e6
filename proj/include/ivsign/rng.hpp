#ifndef IVSIGN_RNG_HPP
#define IVSIGN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include <Eigen/Dense>

namespace ivsign {

/// splitmix64 finalizer; used to derive well-separated stream seeds.
std::uint64_t mix64(std::uint64_t z);

/// Seed of the RNG stream owned by chunk `index` of a run keyed by `seed`.
/// Monte Carlo loops are partitioned into fixed-size chunks, each chunk draws
/// from its own stream, and results are reduced in chunk order, so output
/// does not depend on how chunks are assigned to workers.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

/// Fixed chunk length used by all chunked Monte Carlo loops. Runs with the
/// same seed and different draw counts share the leading draws.
inline constexpr std::int64_t kMcChunk = 8192;

/// Seeded stream of uniforms and normals. The normal generator is an
/// explicit Box-Muller transform (not std::normal_distribution) so that the
/// sequence is identical across standard libraries.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : eng_(mix64(seed)) {}

  /// Uniform on (0, 1].
  double uniform() {
    return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double t = 6.283185307179586476925286766559 * uniform();
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  void normals(Eigen::Ref<Eigen::VectorXd> out) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = normal();
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Number of worker threads used by chunked loops; reads IVSIGN_THREADS once,
/// defaulting to the hardware concurrency.
int max_threads();

/// Runs fn(chunk_index) for every chunk in [0, n_chunks), distributing chunks
/// over workers. fn must only write to state owned by its chunk index.
void for_each_chunk(std::int64_t n_chunks, const std::function<void(std::int64_t)>& fn);

/// Chunk count covering n draws.
inline std::int64_t n_chunks_for(std::int64_t n) {
  return (n + kMcChunk - 1) / kMcChunk;
}

}  // namespace ivsign

#endif  // IVSIGN_RNG_HPP
