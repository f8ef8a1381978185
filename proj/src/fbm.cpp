#include "fracstab/fbm.hpp"

#include "fracstab/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <numbers>

namespace fracstab {

double GaussianStream::next() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * kScale;  // (0, 1]
    const double u2 = static_cast<double>(engine_() >> 11) * kScale;          // [0, 1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(angle);
    has_cached_ = true;
    return r * std::cos(angle);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double fbm_covariance(double hurst, double s, double t) {
    detail::require(hurst > 0.0 && hurst < 1.0, "fbm_covariance", "requires H in (0, 1)");
    detail::require(s >= 0.0 && t >= 0.0, "fbm_covariance", "requires s, t >= 0");
    const double e = 2.0 * hurst;
    return 0.5 * (std::pow(s, e) + std::pow(t, e) - std::pow(std::abs(t - s), e));
}

FbmGenerator::FbmGenerator(double hurst, std::vector<double> grid) : hurst_(hurst), grid_(std::move(grid)) {
    const std::string op = "fbm";
    detail::require(hurst > 0.0 && hurst < 1.0, op, "requires H in (0, 1)");
    detail::require(grid_.size() >= 2, op, "grid needs at least two points");
    detail::require(grid_.size() <= kFbmMaxGrid, op, "size limit exceeded: grid longer than 8192 points");
    detail::require(grid_.front() == 0.0, op, "grid must start at 0");
    for (std::size_t i = 0; i + 1 < grid_.size(); ++i)
        detail::require(grid_[i] < grid_[i + 1], op, "grid must be strictly increasing");

    const Eigen::Index n = static_cast<Eigen::Index>(grid_.size() - 1);
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            cov(i, j) = cov(j, i) = fbm_covariance(hurst, grid_[i + 1], grid_[j + 1]);

    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        cov.diagonal().array() += 1e-12 * std::pow(grid_.back(), 2.0 * hurst);
        llt.compute(cov);
        jittered_ = true;
        if (llt.info() != Eigen::Success)
            throw NumericError("fbm: covariance matrix not positive definite after diagonal jitter");
    }
    const Eigen::MatrixXd lower = llt.matrixL();
    factor_.reserve(static_cast<std::size_t>(n * (n + 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) factor_.push_back(lower(i, j));
}

SampledPath FbmGenerator::sample(GaussianStream& normals) const {
    const std::size_t n = grid_.size() - 1;
    std::vector<double> z(n);
    for (double& v : z) v = normals.next();
    std::vector<double> values(n + 1, 0.0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j <= i; ++j) acc += factor_[k++] * z[j];
        values[i + 1] = acc;
    }
    const double exponent = std::max(hurst_ - 0.01, 0.5 * hurst_);
    return SampledPath(grid_, std::move(values), exponent);
}

SampledPath FbmGenerator::sample(std::uint64_t seed) const {
    GaussianStream normals(seed);
    return sample(normals);
}

SampledPath fbm_sample(const FbmSpec& spec) { return FbmGenerator(spec.hurst, spec.grid).sample(spec.seed); }

double holder_estimate(const SampledPath& p) {
    const std::string op = "holder_estimate";
    detail::require(p.size() >= 256, op, "requires at least 256 points");
    detail::require(is_uniform(p.times()), op, "requires a uniform grid");
    const auto& v = p.values();
    const std::size_t steps = p.size() - 1;
    const double h = (p.back_time() - p.front_time()) / static_cast<double>(steps);

    std::size_t levels = 0;
    while ((steps >> (levels + 1)) >= 32) ++levels;
    const std::size_t stride = std::size_t{1} << levels;
    const std::size_t blocks = steps >> levels;

    std::vector<double> xs, ys;
    for (std::size_t j = 0; j <= levels; ++j) {
        const std::size_t lag = std::size_t{1} << j;
        double best = 0.0;
        for (std::size_t k = 0; k < blocks; ++k) {
            const std::size_t i = k * stride;
            best = std::max(best, std::abs(v[i + lag] - v[i]));
        }
        if (best > 0.0) {
            xs.push_back(std::log(lag * h));
            ys.push_back(std::log(best));
        }
    }
    if (xs.empty()) return std::numeric_limits<double>::infinity();
    if (xs.size() == 1) return 1.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}

}  // namespace fracstab
