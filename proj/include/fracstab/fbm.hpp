#pragma once

#include "fracstab/paths.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace fracstab {

/// Standard normal draws from std::mt19937_64 through Box–Muller. Both the
/// engine and the transform are fully specified, so a seed fixes the stream
/// bit for bit.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}
    double next();

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// Seed for path `index` of a Monte Carlo run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

struct FbmSpec {
    double hurst = 0.5;
    std::vector<double> grid;  // strictly increasing, grid[0] = 0
    std::uint64_t seed = 0;
};

inline constexpr std::size_t kFbmMaxGrid = 8192;

/// R_H(s,t) = ½(s^{2H} + t^{2H} − |t−s|^{2H}).
double fbm_covariance(double hurst, double s, double t);

/// Cholesky factor of R_H on grid \ {0}. Build once per (H, grid) and draw
/// as many paths as needed; sampling is O(n²) per path.
class FbmGenerator {
public:
    FbmGenerator(double hurst, std::vector<double> grid);

    SampledPath sample(std::uint64_t seed) const;
    SampledPath sample(GaussianStream& normals) const;

    double hurst() const { return hurst_; }
    const std::vector<double>& grid() const { return grid_; }
    /// True if the diagonal needed jitter before the factorization succeeded.
    bool jittered() const { return jittered_; }

private:
    double hurst_;
    std::vector<double> grid_;
    std::vector<double> factor_;  // lower triangle, packed by rows
    bool jittered_ = false;
};

/// One exact-covariance sample. B_0 = 0 and the exponent field is the
/// largest claim strictly below H that the path carries: max(H − 0.01, H/2).
SampledPath fbm_sample(const FbmSpec& spec);

/// Slope of log(max increment) against log(scale) over dyadic scales, on a
/// uniform grid with at least 256 points. At every scale the same number of
/// non-overlapping increments is inspected, so the extreme-value factor of
/// the maximum does not drift with scale. Returns +∞ for a constant path;
/// callers cap Hölder claims at 1.
double holder_estimate(const SampledPath& p);

}  // namespace fracstab
