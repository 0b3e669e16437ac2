#pragma once

// Binned measurement distributions and multinomial count simulation.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cvtomo/fock.hpp"
#include "cvtomo/measurement.hpp"
#include "cvtomo/random.hpp"
#include "cvtomo/types.hpp"

namespace cvtomo {

struct BinnedDistribution {
  Modality modality = Modality::homodyne;
  GridSpec grid;
  /// One vector per phase (homodyne) or a single N*N vector (heterodyne,
  /// flat index a*N + b for (x_a, p_b)).
  std::vector<std::vector<double>> probs;
  /// 1 - sum of raw bin probabilities, per phase / overall, before renormalization.
  std::vector<double> leaks;
  /// Largest |leak|.
  double leak = 0.0;
};

inline constexpr double kMaxLeak = 1e-6;

/// Bin probabilities f(x_i) dx (or g(x_i, p_i) dx dp) at bin centers.
/// Throws LeakageError if more than 1e-6 of the mass falls off the grid;
/// otherwise each record is renormalized to sum to one.
inline BinnedDistribution bin_distribution(const DensityMatrix& rho, Modality modality, const GridSpec& grid) {
  grid.validate(modality);
  BinnedDistribution dist;
  dist.modality = modality;
  dist.grid = grid;
  const Index d = rho.dim();
  const MatrixXcd& m = rho.matrix();
  if (modality == Modality::homodyne) {
    const MatrixXd psi = hermite_table(grid, d);
    for (double theta : grid.phases) {
      std::vector<double> pr(grid.n_bins);
      for (std::size_t i = 0; i < grid.n_bins; ++i) {
        pr[i] = std::max(0.0, expectation(m, homodyne_bin_vector(psi.row(static_cast<Index>(i)), theta, grid.dx)));
      }
      dist.probs.push_back(std::move(pr));
    }
  } else {
    const std::size_t n = grid.n_bins;
    std::vector<double> pr(n * n);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        pr[a * n + b] = std::max(0.0, expectation(m, heterodyne_bin_vector(grid, a, b, d)));
      }
    }
    dist.probs.push_back(std::move(pr));
  }
  for (auto& pr : dist.probs) {
    double total = 0.0;
    for (double v : pr) total += v;
    const double leak = 1.0 - total;
    dist.leaks.push_back(leak);
    dist.leak = std::max(dist.leak, std::abs(leak));
  }
  if (!(dist.leak < kMaxLeak)) throw LeakageError(dist.leak);
  for (std::size_t s = 0; s < dist.probs.size(); ++s) {
    const double norm = 1.0 - dist.leaks[s];
    for (double& v : dist.probs[s]) v /= norm;
  }
  return dist;
}

/// Count record. Homodyne counts are phase-major (s*N + i), heterodyne counts
/// are the flattened N*N grid.
struct Dataset {
  Modality modality = Modality::homodyne;
  Index dim = 0;
  GridSpec grid;
  std::vector<std::int64_t> counts;
  std::int64_t copies = 0;
  std::uint64_t seed = 0;

  std::int64_t total() const {
    std::int64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
};

namespace detail {

/// Adds a multinomial(n, p) draw to `out` through sequential conditional
/// binomials; memory is independent of n.
template <class Rng>
void add_multinomial(Rng& rng, std::int64_t n, const std::vector<double>& p, std::int64_t* out) {
  double remaining = 1.0;
  const std::size_t len = p.size();
  for (std::size_t i = 0; i + 1 < len && n > 0; ++i) {
    const double q = remaining > 0.0 ? std::clamp(p[i] / remaining, 0.0, 1.0) : 1.0;
    std::int64_t k = 0;
    if (q >= 1.0) {
      k = n;
    } else if (q > 0.0) {
      std::binomial_distribution<std::int64_t> binom(n, q);
      k = binom(rng);
    }
    out[i] += k;
    n -= k;
    remaining -= p[i];
  }
  if (n > 0) out[len - 1] += n;
}

inline void check_checkpoints(const BinnedDistribution& dist, const std::vector<std::int64_t>& ks) {
  if (ks.empty()) throw ValidationError("at least one copy count is required");
  std::int64_t prev = 0;
  for (auto k : ks) {
    if (k <= 0) throw ValidationError("copy counts must be positive");
    if (k <= prev) throw ValidationError("copy counts must be strictly increasing");
    if (dist.modality == Modality::homodyne &&
        k % static_cast<std::int64_t>(dist.probs.size()) != 0) {
      throw ValidationError("homodyne copy count " + std::to_string(k) + " is not divisible by S = " +
                            std::to_string(dist.probs.size()));
    }
    prev = k;
  }
}

}  // namespace detail

/// Cumulative datasets: the record at ks[j] equals the record at ks[j-1]
/// plus an independent multinomial draw of ks[j] - ks[j-1] copies. Each
/// phase consumes its own substream derived from (seed, phase).
inline std::vector<Dataset> sample_checkpoints(const BinnedDistribution& dist, const std::vector<std::int64_t>& ks,
                                               std::uint64_t seed, Index dim = 0) {
  detail::check_checkpoints(dist, ks);
  const std::size_t records = dist.probs.size();
  const std::size_t len = dist.probs.front().size();
  std::vector<std::mt19937_64> rngs;
  rngs.reserve(records);
  for (std::size_t s = 0; s < records; ++s) rngs.emplace_back(substream_seed(seed, {s}));

  std::vector<Dataset> out;
  out.reserve(ks.size());
  std::vector<std::int64_t> counts(records * len, 0);
  std::int64_t prev = 0;
  for (std::int64_t k : ks) {
    const std::int64_t per_record = (k - prev) / static_cast<std::int64_t>(records);
    for (std::size_t s = 0; s < records; ++s) {
      detail::add_multinomial(rngs[s], per_record, dist.probs[s], counts.data() + s * len);
    }
    out.push_back(Dataset{dist.modality, dim, dist.grid, counts, k, seed});
    prev = k;
  }
  return out;
}

inline Dataset sample_counts(const BinnedDistribution& dist, std::int64_t copies, std::uint64_t seed,
                             Index dim = 0) {
  return sample_checkpoints(dist, {copies}, seed, dim).front();
}

/// `per_decade` log-spaced copy counts from 10^2 to k_max, rounded to
/// multiples of `multiple`, strictly increasing; k_max is always included.
inline std::vector<std::int64_t> log_checkpoints(std::int64_t k_max, int per_decade = 10,
                                                 std::int64_t multiple = 1, std::int64_t k_min = 100) {
  if (k_max < 1 || per_decade < 1 || multiple < 1) throw ValidationError("invalid checkpoint request");
  std::vector<std::int64_t> out;
  const double lo = std::log10(static_cast<double>(std::max<std::int64_t>(k_min, 1)));
  const double hi = std::log10(static_cast<double>(k_max));
  const int steps = static_cast<int>(std::floor((hi - lo) * per_decade + 1e-9));
  for (int j = 0; j <= steps; ++j) {
    const double v = std::pow(10.0, lo + static_cast<double>(j) / per_decade);
    std::int64_t k = std::llround(v / static_cast<double>(multiple)) * multiple;
    k = std::max(k, multiple);
    if (k > k_max) break;
    if (out.empty() || k > out.back()) out.push_back(k);
  }
  const std::int64_t last = (k_max / multiple) * multiple;
  if (last > 0 && (out.empty() || out.back() < last)) out.push_back(last);
  return out;
}

}  // namespace cvtomo
