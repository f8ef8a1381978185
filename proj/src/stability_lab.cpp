#include "fracstab/stability_lab.hpp"

#include "fracstab/errors.hpp"
#include "fracstab/fbm.hpp"
#include "fracstab/io.hpp"
#include "fracstab/mittag_leffler.hpp"
#include "fracstab/product_integration.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

namespace fracstab::lab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double step_of(const std::vector<double>& grid) { return grid.back() / static_cast<double>(grid.size() - 1); }

void check_grid(const std::vector<double>& grid, const std::string& op) {
    detail::require(grid.size() >= 2 && grid.front() == 0.0, op, "grid must start at 0 with at least two points");
    detail::require(is_uniform(grid), op, "grid must be uniform");
}

// E_{β,b}(z) with z clipped to the supported range. Every E_{β,b} used here
// is completely monotone on z <= 0, so clipping gives an upper value.
double ml_clipped(double beta, double b, double z) {
    return ml::eval(beta, b, std::max(z, -ml::kZMaxNegative), 1e-12);
}

// Points on (0, T], quadratically denser near 0 where E2 data misbehave.
std::vector<double> sup_grid(double horizon, std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = static_cast<double>(i + 1) / static_cast<double>(n);
        t[i] = horizon * u * u;
    }
    return t;
}

// ∫_a^b f by adaptive Gauss–Kronrod; b may be +∞.
double integrate(const std::function<double(double)>& f, double a, double b, double tol, const std::string& op) {
    using boost::math::quadrature::gauss_kronrod;
    double err = 0.0;
    const double v = gauss_kronrod<double, 61>::integrate(f, a, b, 15, tol, &err);
    if (!std::isfinite(v)) throw NumericError(op + ": integral is not finite on [" + io::format_double(a) + ", " +
                                              io::format_double(b) + "]");
    if (err > 1e3 * tol * std::max(1.0, std::abs(v)))
        throw ConvergenceError(op + ": quadrature on [" + io::format_double(a) + ", " + io::format_double(b) +
                               "] reached only " + io::format_double(err));
    return v;
}

// ∫_0^∞ f, split at 1 so that integrable singularities at 0 and slow tails
// are treated separately.
double integrate_half_line(const std::function<double(double)>& f, double tol, const std::string& op) {
    return integrate(f, 0.0, 1.0, tol, op) + integrate(f, 1.0, kInf, tol, op);
}

double e3_l1(const ICClass& c, double tol) {
    return integrate_half_line([&](double s) { return std::abs(c.g(s)); }, tol, "class_norm(E3)");
}

double e3_lp(const ICClass& c, double tol) {
    const double v = integrate_half_line([&](double s) { return std::pow(std::abs(c.g(s)), c.p); }, tol, "class_norm(E3)");
    return std::pow(v, 1.0 / c.p);
}

double sup_abs(const RealFn& fn, double horizon, std::size_t n) {
    double best = std::abs(fn(0.0));
    for (double t : sup_grid(horizon, n)) best = std::max(best, std::abs(fn(t)));
    return best;
}

// The two terms of the E2 norm.
std::pair<double, double> e2_terms(const ICClass& c, double a_coef, double beta, const NormOptions& opts) {
    double a = std::abs(c.xi(0.0));
    double b = 0.0;
    for (double t : sup_grid(opts.horizon, opts.eval_points)) {
        a = std::max(a, std::abs(c.xi(t) * ml_clipped(beta, 1.0, a_coef * std::pow(t, beta))));
        b = std::max(b, std::pow(t, 1.0 - c.upsilon) * std::abs(c.derivative(t)));
    }
    return {a, b};
}

Verdict make(const std::string& name, double margin, double where, const std::string& detail) {
    Verdict v;
    v.name = name;
    v.margin = margin;
    v.holds = margin >= 0.0;
    v.where = where;
    v.detail = detail;
    return v;
}

// 1 − S(t − 1) on [1, 2] with S the quintic smooth step; derivative too.
double smooth_cut(double t) {
    if (t <= 1.0) return 1.0;
    if (t >= 2.0) return 0.0;
    const double x = t - 1.0;
    return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

double smooth_cut_derivative(double t) {
    if (t <= 1.0 || t >= 2.0) return 0.0;
    const double x = t - 1.0;
    return -30.0 * x * x * (1.0 - x) * (1.0 - x);
}

}  // namespace

std::string to_string(ICTag tag) {
    switch (tag) {
        case ICTag::E1: return "E1";
        case ICTag::E2: return "E2";
        case ICTag::E3: return "E3";
        case ICTag::E4: return "E4";
        case ICTag::Sum: return "SUM";
    }
    return "?";
}

// ---------------------------------------------------------------------------

ICClass ICClass::e1(SampledPath path, double limit) {
    ICClass c;
    c.tag = ICTag::E1;
    c.path = std::move(path);
    c.limit = limit;
    return c;
}

ICClass ICClass::e2(RealFn xi, RealFn derivative, double c_tilde, double upsilon) {
    ICClass c;
    c.tag = ICTag::E2;
    c.xi = std::move(xi);
    c.derivative = std::move(derivative);
    c.c_tilde = c_tilde;
    c.upsilon = upsilon;
    return c;
}

ICClass ICClass::e3(RealFn g, double eta, double p) {
    ICClass c;
    c.tag = ICTag::E3;
    c.g = std::move(g);
    c.eta = eta;
    c.p = p;
    return c;
}

ICClass ICClass::e4(RealFn g, double beta) {
    ICClass c;
    c.tag = ICTag::E4;
    c.g = std::move(g);
    c.eta = beta;
    return c;
}

ICClass ICClass::sum(std::vector<ICClass> components) {
    ICClass c;
    c.tag = ICTag::Sum;
    c.components = std::move(components);
    return c;
}

void ICClass::validate(double beta) const {
    const std::string op = "ICClass(" + to_string(tag) + ")";
    detail::require(beta > 0.0 && beta < 1.0, op, "beta must lie in (0, 1)");
    switch (tag) {
        case ICTag::E1:
            detail::require(path.has_value(), op, "path missing");
            detail::require(path->front_time() == 0.0, op, "path must start at t = 0");
            detail::require(std::isfinite(limit), op, "limit xi_inf must be finite");
            break;
        case ICTag::E2:
            detail::require(xi && derivative, op, "xi and its derivative are required");
            detail::require(upsilon > 0.0 && upsilon < beta, op, "upsilon must lie in (0, beta)");
            detail::require(std::isfinite(c_tilde) && c_tilde >= 0.0, op, "C~ must be finite and >= 0");
            break;
        case ICTag::E3:
            detail::require(static_cast<bool>(g), op, "g missing");
            detail::require(eta > 0.0 && eta < beta + 1.0, op, "eta must lie in (0, beta + 1)");
            detail::require(p > std::max(1.0 / eta, 1.0), op, "p must exceed max(1/eta, 1)");
            break;
        case ICTag::E4:
            detail::require(static_cast<bool>(g), op, "g missing");
            detail::require(std::abs(eta - beta) <= 1e-12, op, "E4 requires eta = beta");
            break;
        case ICTag::Sum:
            detail::require(!components.empty(), op, "no components");
            for (const auto& c : components) {
                detail::require(c.tag != ICTag::Sum, op, "nested sums are not supported");
                c.validate(beta);
            }
            break;
    }
}

InitialFn ICClass::initial() const {
    switch (tag) {
        case ICTag::E1: return initial::Sampled{*path};
        case ICTag::E2: return initial::ClosedForm{xi, "E2"};
        case ICTag::E3:
        case ICTag::E4: return initial::KernelForm{eta, g};
        case ICTag::Sum: break;
    }
    detail::domain_fail("ICClass::initial", "a sum has no single solver representation");
}

double class_norm(const ICClass& c, double a_coef, double beta, const NormOptions& opts) {
    c.validate(beta);
    switch (c.tag) {
        case ICTag::E1: {
            double best = 0.0;
            for (double v : c.path->values()) best = std::max(best, std::abs(v));
            return best;
        }
        case ICTag::E2: {
            const auto [a, b] = e2_terms(c, a_coef, beta, opts);
            return a + b;
        }
        case ICTag::E3: return e3_l1(c, opts.quad_tol) + e3_lp(c, opts.quad_tol);
        case ICTag::E4: return sup_abs(c.g, opts.horizon, opts.eval_points);
        case ICTag::Sum: {
            double total = 0.0;
            for (const auto& part : c.components) total += class_norm(part, a_coef, beta, opts);
            return total;
        }
    }
    return 0.0;
}

std::vector<double> class_on_grid(const ICClass& c, const std::vector<double>& grid) {
    if (c.tag != ICTag::Sum) return initial_on_grid(c.initial(), grid);
    std::vector<double> out(grid.size(), 0.0);
    for (const auto& part : c.components) {
        const auto v = class_on_grid(part, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) out[i] += v[i];
    }
    return out;
}

Trajectory linear_response(const ICClass& c, double a_coef, double beta, const std::vector<double>& grid) {
    c.validate(beta);
    FracIVP p;
    p.beta = beta;
    p.a_coef = a_coef;
    if (c.tag != ICTag::Sum) {
        p.initial = c.initial();
        return solve_linear_closed_form(p, grid);
    }
    Trajectory out;
    for (const auto& part : c.components) {
        p.initial = part.initial();
        auto y = solve_linear_closed_form(p, grid);
        if (out.values.empty()) {
            out = std::move(y);
            continue;
        }
        for (std::size_t i = 0; i < grid.size(); ++i) out.values[i] += y.values[i];
        out.defect = std::max(out.defect, y.defect);
    }
    out.meta.emplace_back("xi", "SUM");
    return out;
}

double empirical_constant(double a, double b, double lambda, double horizon) {
    std::vector<double> z(512);
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double s = horizon * static_cast<double>(i) / static_cast<double>(z.size() - 1);
        z[i] = std::max(lambda * std::pow(s, a), -ml::kZMaxNegative);
    }
    return ml::bound_constant(a, b, z, 1e-12);
}

double class_bound(const ICClass& c, double a_coef, double beta, double horizon, const NormOptions& opts) {
    const std::string op = "class_bound";
    detail::require(a_coef < 0.0, op, "requires A < 0");
    detail::require(horizon > 0.0, op, "requires a positive horizon");
    c.validate(beta);
    switch (c.tag) {
        case ICTag::E1:
            return class_norm(c, a_coef, beta, opts) * (1.0 + empirical_constant(beta, beta + 1.0, a_coef, horizon));
        case ICTag::E2: {
            const auto [a, b] = e2_terms(c, a_coef, beta, opts);
            const double u = c.upsilon;
            const double gu = std::tgamma(u + 1.0);
            double sup_j = 0.0;
            for (double t : sup_grid(horizon, 4000)) {
                const double z = a_coef * std::pow(t, beta);
                const double j =
                    std::pow(t, beta + u) * (ml_clipped(beta, beta + 1.0, z) - gu * ml_clipped(beta, beta + u + 1.0, z));
                sup_j = std::max(sup_j, j);
            }
            return a + std::abs(a_coef) / u * b * sup_j;
        }
        case ICTag::E3: {
            const double q = c.p / (c.p - 1.0);
            const double cst = empirical_constant(beta, c.eta, a_coef, horizon);
            const double local = std::pow(q * (c.eta - 1.0) + 1.0, -1.0 / q);
            return cst * (local * e3_lp(c, opts.quad_tol) + e3_l1(c, opts.quad_tol) / std::abs(a_coef));
        }
        case ICTag::E4:
            return empirical_constant(beta, beta + 1.0, a_coef, horizon) / std::abs(a_coef) *
                   class_norm(c, a_coef, beta, opts);
        case ICTag::Sum: {
            double total = 0.0;
            for (const auto& part : c.components) total += class_bound(part, a_coef, beta, horizon, opts);
            return total;
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------

bool StabilityReport::all_hold() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.holds; });
}

void write_report(std::ostream& os, const StabilityReport& r) {
    for (const auto& [k, v] : r.parameters) os << k << ": " << v << '\n';
    for (const auto& v : r.verdicts) {
        os << '\n'
           << "verdict: " << v.name << '\n'
           << "holds: " << (v.holds ? "yes" : "no") << '\n'
           << "margin: " << io::format_double(v.margin) << '\n'
           << "at: " << io::format_double(v.where) << '\n';
        if (!v.detail.empty()) os << "detail: " << v.detail << '\n';
    }
}

Verdict ml_envelope_check(const Trajectory& x, double m_x0, double b_exp, double b_coef, double beta, double tol) {
    const std::string op = "ml_envelope_check";
    detail::require(m_x0 > 0.0 && b_exp > 0.0, op, "m(x0) and b must be > 0");
    detail::require(b_coef < 0.0, op, "requires B < 0");
    detail::require(beta > 0.0 && beta < 1.0, op, "beta must lie in (0, 1)");
    double margin = kInf, where = 0.0;
    for (std::size_t i = 0; i < x.grid.size(); ++i) {
        detail::require(std::isfinite(x.values[i]), op, "trajectory is not finite");
        const double env = std::pow(m_x0 * ml::eval(beta, 1.0, b_coef * std::pow(x.grid[i], beta), 1e-12), b_exp);
        const double slack = env - std::abs(x.values[i]);
        if (slack < margin) {
            margin = slack;
            where = x.grid[i];
        }
    }
    auto v = make("envelope", margin + tol, where,
                  "[" + io::format_double(m_x0) + " E_{beta,1}(" + io::format_double(b_coef) + " t^beta)]^" +
                      io::format_double(b_exp));
    v.margin = margin;
    return v;
}

Verdict positivity_check(const Trajectory& x) {
    double lo = kInf, where = 0.0;
    for (std::size_t i = 0; i < x.values.size(); ++i)
        if (x.values[i] < lo) {
            lo = x.values[i];
            where = x.grid[i];
        }
    auto v = make("positivity", lo, where, "min X");
    v.holds = lo > 0.0;
    return v;
}

Verdict decay_check(const Trajectory& x, double rel, double tail_fraction) {
    const std::string op = "decay_check";
    detail::require(rel > 0.0 && tail_fraction > 0.0 && tail_fraction <= 1.0, op, "invalid proxy settings");
    double ref = 0.0;
    for (double v : x.values) ref = std::max(ref, std::abs(v));
    const double t0 = x.grid.back() - tail_fraction * (x.grid.back() - x.grid.front());
    double margin = kInf, where = x.grid.back();
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        if (x.grid[i] < t0) continue;
        const double slack = rel * ref - std::abs(x.values[i]);
        if (slack < margin) {
            margin = slack;
            where = x.grid[i];
        }
    }
    return make("decay", margin, where,
                "|X| <= " + io::format_double(rel) + " sup|X| on the last " + io::format_double(tail_fraction) +
                    " of the horizon (finite-horizon proxy)");
}

Verdict bound_check(const Trajectory& x, double bound, double tol) {
    double margin = kInf, where = 0.0;
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        const double slack = bound - std::abs(x.values[i]);
        if (slack < margin) {
            margin = slack;
            where = x.grid[i];
        }
    }
    auto v = make("bound", margin + tol, where, "sup|X| <= " + io::format_double(bound));
    v.margin = margin;
    return v;
}

ReductionResult reduction_check(const FracIVP& p, const Trajectory& x, const Trajectory& y, double tol) {
    const std::string op = "reduction_check";
    p.validate();
    check_grid(x.grid, op);
    detail::require(y.grid == x.grid && x.values.size() == x.grid.size() && y.values.size() == y.grid.size(), op,
                    "x and y must share the grid");
    const double c = p.nonlinearity.lipschitz;
    detail::require(c >= 0.0 && std::isfinite(c), op, "Lipschitz constant C must be finite and >= 0");
    const auto& grid = x.grid;

    ReductionResult res;
    res.u.grid = grid;
    res.u.values.assign(grid.size(), 0.0);
    if (c > 0.0) {
        const quad::LagWeights w(step_of(grid), grid.size() - 1, quad::ml_kernel(p.beta, p.beta, p.a_coef));
        std::vector<double> abs_y(grid.size()), rhs(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) abs_y[i] = std::abs(y.values[i]);
        for (std::size_t n = 0; n < grid.size(); ++n) rhs[n] = c * w.convolve(abs_y, n);
        ComparisonKernel k;
        k.k = [c](double, double v) { return c * v; };
        k.lipschitz = c;
        k.label = "Cx";
        const ComparisonProblem cp{SampledPath(grid, rhs, 1.0), p.a_coef, p.beta, k, grid.back()};
        res.u = majorant_solve(cp, grid).u;
    }
    double margin = kInf, where = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double slack = res.u.values[i] + std::abs(y.values[i]) - std::abs(x.values[i]);
        if (slack < margin) {
            margin = slack;
            where = grid[i];
        }
    }
    res.verdict = make("reduction", margin + tol, where, "|X| <= u + |Y|");
    res.verdict.margin = margin;
    return res;
}

// ---------------------------------------------------------------------------

NoiseBudget noise_budget(double alpha, double beta, const RealFn& f, const RealFn& df, const RealFn& theta, double p,
                         const NoiseBudgetOptions& opts) {
    const std::string op = "noise_budget";
    detail::require(alpha > 1.0 && alpha < 2.0, op, "alpha must lie in (1, 2)");
    detail::require(beta > 0.0 && beta < 1.0, op, "beta must lie in (0, 1)");
    detail::require(p >= 1.0 && std::isfinite(p), op, "p must be finite and >= 1");
    detail::require(f && df && theta, op, "f, f' and theta are required");
    detail::require(opts.horizon > 1.0, op, "horizon T_inf must exceed 1");

    const auto ft = [&](double s) { return std::abs(f(s) * theta(s)); };
    const auto ftp = [&](double s) { return std::pow(std::abs(f(s) * theta(s)), p); };
    const auto dft = [&](double s) { return std::abs(df(s) * theta(s)); };
    const double tol = opts.quad_tol;
    const double t = opts.horizon;
    const auto body = [&](const std::function<double(double)>& fn) {
        return integrate(fn, 0.0, 1.0, tol, op) + integrate(fn, 1.0, t, tol, op);
    };
    const auto check = [&](double v, const std::string& what) {
        if (!std::isfinite(v) || v > opts.overflow) throw NumericError(op + ": " + what + " is divergent");
        return v;
    };

    NoiseBudget r;
    r.l1_ftheta = check(body(ft), "||f theta||_L1");
    r.lp_ftheta = std::pow(check(body(ftp), "||f theta||_Lp"), 1.0 / p);
    r.l1_dftheta = check(body(dft), "||f' theta||_L1");
    r.tail_l1_ftheta = check(integrate(ft, t, kInf, tol, op), "tail of ||f theta||_L1");
    r.tail_lp_ftheta = check(integrate(ftp, t, kInf, tol, op), "tail of ||f theta||_Lp");
    r.tail_l1_dftheta = check(integrate(dft, t, kInf, tol, op), "tail of ||f' theta||_L1");

    const bool p_ok = p > 1.0 / (alpha - 1.0);
    const bool order_ok = beta + 1.0 > alpha;
    r.exponents_ok = p_ok && order_ok;
    r.admissible = r.exponents_ok;
    if (!p_ok) r.reason = "p <= 1/(alpha - 1)";
    if (!order_ok) r.reason += std::string(r.reason.empty() ? "" : "; ") + "beta + 1 <= alpha";
    return r;
}

NoiseSplit noise_split(double beta, double a_coef, double alpha, const RealFn& f, const RealFn& df,
                       const SampledPath& theta, const std::vector<double>& grid) {
    const std::string op = "noise_split";
    check_grid(grid, op);
    detail::require(beta > 0.0 && beta < 1.0, op, "beta must lie in (0, 1)");
    detail::require(f && df, op, "f and f' are required");
    const NoiseSpec spec{alpha, SampledPath::from_function(theta.times(), f, 1.0), theta, df};
    const auto tilde = integrated_noise_on_grid(spec, grid);

    const std::size_t steps = grid.size() - 1;
    const double h = step_of(grid);
    const quad::LagWeights dk(h, steps, quad::ml_kernel(beta, alpha - 1.0, a_coef));
    const quad::LagWeights k(h, steps, quad::ml_kernel(beta, alpha, a_coef));
    std::vector<double> ft(grid.size()), dft(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double th = theta.at(grid[i]);
        ft[i] = f(grid[i]) * th;
        dft[i] = grid[i] > 0.0 ? df(grid[i]) * th : 0.0;
    }
    NoiseSplit out;
    out.grid = grid;
    out.response.resize(grid.size());
    out.i31.resize(grid.size());
    out.i32.resize(grid.size());
    for (std::size_t n = 0; n <= steps; ++n) {
        out.response[n] = dk.convolve(tilde, n);
        out.i31[n] = dk.convolve(ft, n);
        out.i32[n] = -k.convolve(dft, n);
    }
    return out;
}

// ---------------------------------------------------------------------------

double example_h(double c, double x) {
    detail::require(c > 0.0, "example_h", "requires C > 0");
    return x >= 0.0 ? -std::expm1(-c * x) : std::expm1(c * x);
}

Nonlinearity example_nonlinearity(double c) {
    detail::require(c > 0.0, "example_nonlinearity", "requires C > 0");
    Nonlinearity n;
    n.h = [c](double x) { return example_h(c, x); };
    n.lipschitz = c;
    n.is_h1 = true;
    n.is_h2 = true;
    n.monotone = true;
    n.concave_on_positives = true;
    n.label = "saturating(" + io::format_double(c) + ")";
    return n;
}

double example_xi(const XiExample& e, double t) {
    if (t <= 0.0) return 0.0;
    const double psi = smooth_cut(t);
    const double g = psi * e.c0 * std::pow(t, 3.0 - e.upsilon) + (1.0 - psi) * e.c1 / (1.0 + t);
    return g * std::sin(1.0 / t);
}

double example_xi_derivative(const XiExample& e, double t) {
    if (t <= 0.0) return 0.0;
    const double psi = smooth_cut(t), dpsi = smooth_cut_derivative(t);
    const double p0 = e.c0 * std::pow(t, 3.0 - e.upsilon), q = e.c1 / (1.0 + t);
    const double g = psi * p0 + (1.0 - psi) * q;
    const double dg = dpsi * (p0 - q) + psi * (3.0 - e.upsilon) * p0 / t - (1.0 - psi) * q / (1.0 + t);
    return dg * std::sin(1.0 / t) - g / (t * t) * std::cos(1.0 / t);
}

// ---------------------------------------------------------------------------

namespace {

void check_mc(const McConfig& cfg, const std::string& op) {
    cfg.problem.validate();
    detail::require(cfg.problem.noise.has_value(), op, "the problem needs a noise term (f, alpha)");
    detail::require(cfg.hurst > 0.0 && cfg.hurst < 1.0, op, "H must lie in (0, 1)");
    detail::require(cfg.n_paths >= 1, op, "needs at least one path");
    check_grid(cfg.grid, op);
}

}  // namespace

std::vector<double> mean_envelope(const McConfig& cfg) {
    const std::string op = "mean_envelope";
    check_mc(cfg, op);
    const auto& p = cfg.problem;
    const auto& h = p.nonlinearity;
    if (!h.is_zero())
        detail::require(h.monotone && h.concave_on_positives && (h.is_h1 || h.is_h2), op,
                        "h must be non-decreasing, concave on R+ (convex on R-) and satisfy (H1)/(H2)");
    detail::require(std::abs(p.noise->alpha - (p.beta + 1.0)) <= 1e-12, op, "the envelope needs alpha = beta + 1");
    const double hurst = cfg.hurst;
    const SampledPath drift = SampledPath::from_function(cfg.grid, [hurst](double s) { return std::pow(s, hurst); }, hurst);

    std::vector<double> total(cfg.grid.size(), 0.0);
    for (const InitialFn* xi : {&cfg.xi_plus, &cfg.xi_minus}) {
        FracIVP q;
        q.beta = p.beta;
        q.a_coef = p.a_coef + h.lipschitz;
        q.initial = *xi;
        q.noise = NoiseSpec{p.noise->alpha, p.noise->f, drift, p.noise->f_derivative};
        const auto u = solve_linear_closed_form(q, cfg.grid, cfg.scheme);
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += u.values[i];
    }
    return total;
}

McResult mean_stability_mc(const McConfig& cfg) {
    const std::string op = "mean_stability_mc";
    check_mc(cfg, op);
    std::optional<std::vector<double>> envelope;
    if (cfg.envelope) envelope = mean_envelope(cfg);

    const FbmGenerator gen(cfg.hurst, cfg.grid);
    const std::size_t n = cfg.n_paths;
    std::vector<std::vector<double>> values(n);
    std::vector<std::string> errors(n);
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            FracIVP q = cfg.problem;
            q.noise->theta = gen.sample(derive_seed(cfg.seed, i));
            try {
                values[i] = solve_semilinear(q, cfg.grid, cfg.scheme).values;
            } catch (const NumericError& e) {
                errors[i] = e.what();
            }
        }
    };
    unsigned jobs = cfg.jobs ? cfg.jobs : std::max(1u, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
    std::vector<std::thread> pool;
    for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    McResult r;
    r.grid = cfg.grid;
    const std::size_t m = cfg.grid.size();
    std::vector<double> sum(m, 0.0), sum_sq(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (values[i].empty()) {
            ++r.failed;
            r.failures.push_back("path " + std::to_string(i) + ": " + errors[i]);
            continue;
        }
        ++r.used;
        for (std::size_t k = 0; k < m; ++k) {
            const double a = std::abs(values[i][k]);
            sum[k] += a;
            sum_sq[k] += a * a;
        }
        if (cfg.keep_paths) r.paths.push_back(std::move(values[i]));
    }
    if (r.used == 0) throw NumericError(op + ": every path failed (" + r.failures.front() + ")");
    const double cnt = static_cast<double>(r.used);
    r.mean_abs.resize(m);
    r.std_error.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        r.mean_abs[k] = sum[k] / cnt;
        const double var = r.used > 1 ? std::max(0.0, (sum_sq[k] - cnt * r.mean_abs[k] * r.mean_abs[k]) / (cnt - 1.0)) : 0.0;
        r.std_error[k] = std::sqrt(var / cnt);
    }
    r.envelope = std::move(envelope);
    return r;
}

}  // namespace fracstab::lab
