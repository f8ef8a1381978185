#include "fracstab/product_integration.hpp"

#include "fracstab/errors.hpp"
#include "fracstab/mittag_leffler.hpp"

#include <cmath>

namespace fracstab::quad {

KernelAntiderivatives power_kernel(double exponent, double scale) {
    detail::require(exponent > 0.0, "power_kernel", "requires exponent > 0");
    const double c1 = scale / exponent;
    const double c2 = scale / (exponent * (exponent + 1.0));
    return {
        [=](double u) { return u <= 0.0 ? 0.0 : c1 * std::pow(u, exponent); },
        [=](double u) { return u <= 0.0 ? 0.0 : c2 * std::pow(u, exponent + 1.0); },
    };
}

KernelAntiderivatives ml_kernel(double beta, double c, double lambda, double tol) {
    detail::require(beta > 0.0 && c > 0.0, "ml_kernel", "requires beta > 0 and c > 0");
    return {
        [=](double u) { return u <= 0.0 ? 0.0 : std::pow(u, c) * ml::eval(beta, c + 1.0, lambda * std::pow(u, beta), tol); },
        [=](double u) {
            return u <= 0.0 ? 0.0 : std::pow(u, c + 1.0) * ml::eval(beta, c + 2.0, lambda * std::pow(u, beta), tol);
        },
    };
}

LagWeights::LagWeights(double h, std::size_t steps, const KernelAntiderivatives& kernel)
    : h_(h), k1_(steps + 1), interior_(steps + 1, 0.0), endpoint_(steps + 1, 0.0) {
    detail::require(h > 0.0, "LagWeights", "requires h > 0");
    std::vector<double> k2(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        k1_[k] = kernel.first(k * h);
        k2[k] = kernel.second(k * h);
    }
    // D_k: mean of K1 over the cell [(k−1)h, kh].
    std::vector<double> d(steps + 2, 0.0);
    for (std::size_t k = 1; k <= steps; ++k) d[k] = (k2[k] - k2[k - 1]) / h;
    if (steps >= 1) d1_ = d[1];
    for (std::size_t m = 1; m < steps; ++m) interior_[m] = d[m + 1] - d[m];
    for (std::size_t n = 1; n <= steps; ++n) endpoint_[n] = k1_[n] - d[n];
}

double LagWeights::weight(std::size_t n, std::size_t m) const {
    if (n == 0) return 0.0;
    if (m == 0) return d1_;
    if (m == n) return endpoint_[n];
    return interior_[m];
}

double LagWeights::convolve_history(std::span<const double> phi, std::size_t n) const {
    if (n == 0) return 0.0;
    double sum = endpoint_[n] * phi[0];
    for (std::size_t m = 1; m < n; ++m) sum += interior_[m] * phi[n - m];
    return sum;
}

double LagWeights::convolve(std::span<const double> phi, std::size_t n) const {
    if (n == 0) return 0.0;
    return d1_ * phi[n] + convolve_history(phi, n);
}

double integrate(std::span<const double> nodes, std::span<const double> values, double t,
                 const KernelAntiderivatives& kernel) {
    double sum = 0.0;
    for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
        const double width = nodes[j + 1] - nodes[j];
        const double u = t - nodes[j];
        const double v = t - nodes[j + 1];
        const double k1u = kernel.first(u);
        const double k1v = kernel.first(v);
        const double mean = (kernel.second(u) - kernel.second(v)) / width;
        sum += values[j] * (k1u - mean) + values[j + 1] * (mean - k1v);
    }
    return sum;
}

}  // namespace fracstab::quad
