#pragma once

#include <span>

namespace fracstab {

/// Reciprocal Gamma function 1/Γ(x); zero at the poles x = 0, -1, -2, ...
double rgamma(double x);

/// ln|Γ(x)| without touching the global `signgam`.
double lgamma_abs(double x);

namespace ml {

inline constexpr double kDefaultTol = 1e-10;
// Supported argument range: z ∈ [-kZMaxNegative, kZMaxPositive].
inline constexpr double kZMaxNegative = 200.0;
inline constexpr double kZMaxPositive = 30.0;

struct Query {
    double a = 1.0;
    double b = 1.0;
    double z = 0.0;
    double tol = kDefaultTol;
};

/// Which evaluation route produced a value. Exposed for diagnostics and tests.
enum class Route { Zero, Series, Asymptotic, ContourIntegral, ExponentialKernel };

struct Evaluation {
    double value;
    Route route;
};

/// Two-parameter Mittag-Leffler function E_{a,b}(z) for real z.
///
/// Throws DomainError for a <= 0, b <= 0, tol <= 0 or z outside the supported
/// range, and AccuracyError when no route can certify `tol`.
double eval(const Query& q);
double eval(double a, double b, double z, double tol = kDefaultTol);

/// Same as eval() but reports the route taken.
Evaluation eval_traced(const Query& q);

/// t^{b-1} E_{a,b}(λ t^a). Singular at t = 0 when b < 1.
double kernel(double t, double lambda, double a, double b, double tol = kDefaultTol);

/// max over the grid of |E_{a,b}(z)|·(1+|z|): an empirical lower estimate of
/// the decay constant C_{a,b} for z <= 0. Requires a ∈ (0,2).
double bound_constant(double a, double b, std::span<const double> grid, double tol = kDefaultTol);

}  // namespace ml
}  // namespace fracstab
