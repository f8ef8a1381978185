#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fracstab::quad {

/// A weakly singular convolution kernel K described by its first and second
/// antiderivatives, K1(u) = ∫_0^u K and K2(u) = ∫_0^u K1. Product integration
/// only ever needs these two, which is what lets the singular factor be
/// integrated exactly against a piecewise-linear density.
struct KernelAntiderivatives {
    std::function<double(double)> first;
    std::function<double(double)> second;
};

/// scale · u^{exponent−1}.
KernelAntiderivatives power_kernel(double exponent, double scale = 1.0);

/// u^{c−1} E_{β,c}(λ u^β); antiderivatives u^c E_{β,c+1}(λu^β) and
/// u^{c+1} E_{β,c+2}(λu^β).
KernelAntiderivatives ml_kernel(double beta, double c, double lambda, double tol = 1e-13);

/// First-order product-integration weights on a uniform grid with step h:
///
///   ∫_0^{t_n} K(t_n − s) φ(s) ds ≈ Σ_{m=0}^{n} W_n(m) φ(t_{n−m}),
///
/// exact when φ is piecewise linear on the grid. Interior weights depend only
/// on the lag m; the weight of the node at s = 0 also depends on n.
class LagWeights {
public:
    LagWeights(double h, std::size_t steps, const KernelAntiderivatives& kernel);

    std::size_t steps() const { return k1_.size() - 1; }
    double step() const { return h_; }

    /// W_n(m), 0 <= m <= n <= steps().
    double weight(std::size_t n, std::size_t m) const;

    /// Weight of the current node (lag 0); the implicit part of a scheme.
    double self_weight() const { return d1_; }

    /// Σ_{m=0}^{n} W_n(m) φ[n−m].
    double convolve(std::span<const double> phi, std::size_t n) const;

    /// Same sum without the lag-0 term.
    double convolve_history(std::span<const double> phi, std::size_t n) const;

    /// K1(t_n) = Σ_m W_n(m): the exact integral of the kernel over [0, t_n].
    double total(std::size_t n) const { return k1_[n]; }

private:
    double h_;
    double d1_ = 0.0;
    std::vector<double> k1_;        // K1(kh), k = 0..steps
    std::vector<double> interior_;  // D_{m+1} − D_m, index m (m = 0 unused)
    std::vector<double> endpoint_;  // K1(nh) − D_n, index n
};

/// ∫_{nodes[0]}^{nodes.back()} K(t − s) φ(s) ds with φ the piecewise-linear
/// interpolant of (nodes, values); requires t >= nodes.back(). Any grid.
double integrate(std::span<const double> nodes, std::span<const double> values, double t,
                 const KernelAntiderivatives& kernel);

}  // namespace fracstab::quad
