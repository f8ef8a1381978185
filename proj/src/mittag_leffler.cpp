#include "fracstab/mittag_leffler.hpp"

#include "fracstab/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

namespace fracstab {

double lgamma_abs(double x) {
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

double rgamma(double x) {
    if (x <= 0.0 && x == std::floor(x)) return 0.0;
    if (x > 0.0 && x < 170.0) return 1.0 / std::tgamma(x);
    int sign = 0;
    const double lg = ::lgamma_r(x, &sign);
    return sign * std::exp(-lg);
}

namespace ml {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxSeriesTerms = 10000;
constexpr double kAsymptoticThreshold = -10.0;
constexpr double kQuadTol = 1e-14;

// Accuracy targets are absolute for |E| <= 1 and relative above.
double effective_tol(double tol, double value) {
    return tol * std::max(1.0, std::abs(value));
}

std::string describe(double a, double b, double z) {
    std::ostringstream os;
    os.precision(17);
    os << "E_{" << a << "," << b << "}(" << z << ")";
    return os.str();
}

std::optional<double> try_series(double a, double b, double z, double tol) {
    const double log_abs_z = std::log(std::abs(z));
    const bool alternating = z < 0.0;
    double sum = 0.0;
    double compensation = 0.0;
    double max_abs = 0.0;
    double prev_log = std::numeric_limits<double>::infinity();
    for (int k = 0; k < kMaxSeriesTerms; ++k) {
        const double log_term = k * log_abs_z - lgamma_abs(a * k + b);
        if (log_term > 700.0) return std::nullopt;
        double term = std::exp(log_term);
        if (alternating && (k % 2 == 1)) term = -term;
        max_abs = std::max(max_abs, std::abs(term));
        // Neumaier summation keeps the rounding estimate below honest.
        const double t = sum + term;
        if (std::abs(sum) >= std::abs(term))
            compensation += (sum - t) + term;
        else
            compensation += (term - t) + sum;
        sum = t;
        const bool decreasing = log_term < prev_log;
        prev_log = log_term;
        if (k > 0 && decreasing && std::abs(term) < 0.1 * effective_tol(tol, sum + compensation)) {
            const double value = sum + compensation;
            const double rounding = 8.0 * kEps * max_abs;
            if (rounding > 0.1 * effective_tol(tol, value)) return std::nullopt;
            return value;
        }
    }
    return std::nullopt;
}

// -Σ_{k>=1} z^{-k}/Γ(b-ak), truncated at the smallest pair of terms.
std::optional<double> try_asymptotic(double a, double b, double z, double tol) {
    if (a >= 1.0 || z > kAsymptoticThreshold) return std::nullopt;
    const double x = -z;
    const double log_x = std::log(x);
    constexpr int kMaxTerms = 400;
    double terms[kMaxTerms + 1];
    int count = 0;
    for (int k = 1; k <= kMaxTerms; ++k) {
        const double arg = b - a * k;
        double term = 0.0;
        if (!(arg <= 0.0 && arg == std::floor(arg))) {
            int sign = 0;
            const double lg = ::lgamma_r(arg, &sign);
            const double log_mag = -k * log_x - lg;
            if (log_mag > 700.0) break;
            // -z^{-k} = -(-1)^k x^{-k}
            term = -sign * std::exp(log_mag) * ((k % 2 == 0) ? 1.0 : -1.0);
        }
        terms[count++] = term;
    }
    if (count < 2) return std::nullopt;
    int best = 0;
    double best_mag = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < count; ++i) {
        const double mag = std::max(std::abs(terms[i]), std::abs(terms[i + 1]));
        if (mag < best_mag) {
            best_mag = mag;
            best = i;
        }
    }
    double value = 0.0;
    for (int i = 0; i <= best; ++i) value += terms[i];
    // Exponentially small contribution the algebraic expansion does not see.
    const double stokes = std::exp(-std::pow(x, 1.0 / a) + (1.0 - b) / a * log_x) / a;
    const double estimate = std::max(best_mag, stokes);
    if (100.0 * estimate > effective_tol(tol, value)) return std::nullopt;
    return value;
}

// Contour integral representation for 0 < a < 1 and z < 0 (the ray z lies
// outside the sector |arg ζ| <= aπ, so no residue term appears):
//   E_{a,b}(z) = ∫_ε^∞ K(χ) dχ + ∫_{-aπ}^{aπ} P(φ) dφ.
double contour_integral(double a, double b, double z, double tol) {
    using boost::math::quadrature::gauss_kronrod;
    constexpr double pi = std::numbers::pi;
    const double x = -z;
    // For a <= 1/2 the arc stays in Re >= 0, away from the pole, so the
    // radius can be 1; a smaller radius makes chi^p huge on the ray when
    // p = (1-b)/a is very negative and the sum cancels badly.
    const double eps = a <= 0.5 ? 1.0 : std::min(1.0, 0.5 * x);
    const double p = (1.0 - b) / a;
    // With z = -x the ray integrand has a peak of width ~ 2x·cos(aπ/2) at
    // χ = x; numerator and denominator are written to avoid cancellation as
    // a -> 1.
    const double s1 = std::sin(pi * (1.0 - b));
    const double half_cos = std::cos(0.5 * a * pi);
    const double s12 = 2.0 * std::sin(pi * (1.0 - b + 0.5 * a)) * half_cos;  // s1 + sin(π(1-b+a))
    const double one_plus_cos = 2.0 * half_cos * half_cos;

    auto ray = [&](double chi) {
        const double log_weight = p * std::log(chi) - std::pow(chi, 1.0 / a);
        if (log_weight < -745.0) return 0.0;
        const double num = s1 * (chi - x) + x * s12;
        const double den = (chi - x) * (chi - x) + 2.0 * chi * x * one_plus_cos;
        return std::exp(log_weight) * num / (den * a * pi);
    };
    const double eps_inv_a = std::pow(eps, 1.0 / a);
    const double arc_scale = std::pow(eps, 1.0 + p) / (2.0 * a * pi);
    auto arc = [&](double phi) {
        const double omega = eps_inv_a * std::sin(phi / a) + phi * (1.0 + p);
        const double num = std::cos(omega) * (eps * std::cos(phi) - z) + std::sin(omega) * eps * std::sin(phi);
        const double den = eps * eps - 2.0 * eps * z * std::cos(phi) + z * z;
        return arc_scale * std::exp(eps_inv_a * std::cos(phi / a)) * num / den;
    };

    // Beyond χ^{1/a} = 745 the ray integrand underflows.
    const double chi_end = std::max(2.0 * eps, std::pow(745.0, a));
    const double width = std::max(2.0 * x * half_cos, 1e-3 * x);
    std::vector<double> breaks{eps, chi_end};
    for (double k : {-8.0, -1.0, 0.0, 1.0, 8.0}) breaks.push_back(x + k * width);
    breaks.push_back(2.0 * x + 2.0);
    std::erase_if(breaks, [&](double v) { return v < eps || v > chi_end; });
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    const int nb = static_cast<int>(breaks.size());

    // One Kronrod pass per piece gives a rough size for the whole integral.
    // Boost's tolerance is relative to each piece, so the refinement target
    // is converted from the absolute budget; refining a 1e-80 tail to 1e-14
    // of itself would cost millions of evaluations.
    std::vector<double> coarse(nb, 0.0), coarse_l1(nb, 0.0);
    double rough = 0.0;
    for (int i = 0; i + 1 < nb; ++i) {
        double err = 0.0;
        coarse[i] = gauss_kronrod<double, 31>::integrate(ray, breaks[i], breaks[i + 1], 0, kQuadTol, &err, &coarse_l1[i]);
        rough += coarse[i];
    }
    double arc_l1 = 0.0;
    {
        double err = 0.0;
        rough += 2.0 * gauss_kronrod<double, 31>::integrate(arc, 0.0, a * pi, 0, kQuadTol, &err, &arc_l1);
    }
    const double budget = 0.05 * effective_tol(tol, rough) / nb;

    double value = 0.0;
    double error = 0.0;
    double l1 = 0.0;
    for (int i = 0; i + 1 < nb; ++i) {
        if (coarse_l1[i] <= 1e-3 * budget) {
            value += coarse[i];
            error += coarse_l1[i];
            l1 += coarse_l1[i];
            continue;
        }
        double err = 0.0;
        double piece_l1 = 0.0;
        const double rel = std::max(kQuadTol, budget / coarse_l1[i]);
        value += gauss_kronrod<double, 31>::integrate(ray, breaks[i], breaks[i + 1], 20, rel, &err, &piece_l1);
        error += err;
        l1 += piece_l1;
    }
    {
        double err = 0.0;
        double piece_l1 = 0.0;
        // An unreachable relative target makes Boost's error estimate blow up.
        const double rel = std::max(kQuadTol, budget / std::max(arc_l1, 1e-300));
        value += 2.0 * gauss_kronrod<double, 31>::integrate(arc, 0.0, a * pi, 20, rel, &err, &piece_l1);
        error += 2.0 * err;
        l1 += 2.0 * piece_l1;
    }
    const double rounding = 16.0 * kEps * l1;
    if (error + rounding > effective_tol(tol, value))
        throw AccuracyError("ml::eval: contour integral cannot reach tol for " + describe(a, b, z));
    return value;
}

// a = 1, z < 0.
double exponential_kernel(double b, double z, double tol) {
    if (b == 1.0) return std::exp(z);
    if (b < 1.0) return rgamma(b) + z * exponential_kernel(b + 1.0, z, tol / std::max(1.0, -z));
    // E_{1,b}(z) = (1/Γ(b-1)) ∫_0^1 e^{z(1-u)} u^{b-2} du
    boost::math::quadrature::tanh_sinh<double> integrator;
    auto f = [&](double u) {
        if (u <= 0.0) return 0.0;
        return std::exp(z * (1.0 - u) + (b - 2.0) * std::log(u));
    };
    double err = 0.0;
    double l1 = 0.0;
    const double integral = integrator.integrate(f, 0.0, 1.0, kQuadTol, &err, &l1);
    const double value = rgamma(b - 1.0) * integral;
    if (std::abs(rgamma(b - 1.0)) * (err + 16.0 * kEps * l1) > effective_tol(tol, value))
        throw AccuracyError("ml::eval: quadrature cannot reach tol for " + describe(1.0, b, z));
    return value;
}

void validate(const Query& q) {
    const std::string op = "ml::eval";
    detail::require(std::isfinite(q.a) && q.a > 0.0, op, "requires a > 0");
    detail::require(std::isfinite(q.b) && q.b > 0.0, op, "requires b > 0");
    detail::require(std::isfinite(q.tol) && q.tol > 0.0, op, "requires tol > 0");
    detail::require(std::isfinite(q.z) && q.z >= -kZMaxNegative && q.z <= kZMaxPositive, op,
                    "requires z in [-200, 30]");
}

}  // namespace

Evaluation eval_traced(const Query& q) {
    validate(q);
    const double a = q.a, b = q.b, z = q.z, tol = q.tol;
    if (z == 0.0) return {rgamma(b), Route::Zero};
    if (auto s = try_series(a, b, z, tol)) return {*s, Route::Series};
    if (z > 0.0)
        throw AccuracyError("ml::eval: positive argument beyond the series regime for " + describe(a, b, z));
    if (a == 1.0) return {exponential_kernel(b, z, tol), Route::ExponentialKernel};
    if (a > 1.0)
        throw AccuracyError("ml::eval: a > 1 is supported only in the series regime, " + describe(a, b, z));
    if (auto s = try_asymptotic(a, b, z, tol)) return {*s, Route::Asymptotic};
    return {contour_integral(a, b, z, tol), Route::ContourIntegral};
}

double eval(const Query& q) { return eval_traced(q).value; }

double eval(double a, double b, double z, double tol) { return eval(Query{a, b, z, tol}); }

double kernel(double t, double lambda, double a, double b, double tol) {
    detail::require(std::isfinite(t) && t >= 0.0, "ml::kernel", "requires t >= 0");
    if (t == 0.0) {
        detail::require(b >= 1.0, "ml::kernel", "t^{b-1} is singular at t = 0 for b < 1");
        detail::require(a > 0.0 && b > 0.0, "ml::kernel", "requires a, b > 0");
        return b == 1.0 ? 1.0 : 0.0;
    }
    return std::pow(t, b - 1.0) * eval(a, b, lambda * std::pow(t, a), tol);
}

double bound_constant(double a, double b, std::span<const double> grid, double tol) {
    const std::string op = "ml::bound_constant";
    detail::require(a > 0.0 && a < 2.0, op, "requires a in (0, 2)");
    detail::require(!grid.empty(), op, "grid must be nonempty");
    double best = 0.0;
    for (double z : grid) {
        detail::require(z <= 0.0, op, "grid entries must be <= 0");
        best = std::max(best, std::abs(eval(a, b, z, tol)) * (1.0 + std::abs(z)));
    }
    return best;
}

}  // namespace ml
}  // namespace fracstab
