#include "fracstab/solver.hpp"

#include "fracstab/errors.hpp"
#include "fracstab/io.hpp"
#include "fracstab/mittag_leffler.hpp"
#include "fracstab/product_integration.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <ostream>

namespace fracstab {

Nonlinearity Nonlinearity::mirrored() const {
    Nonlinearity out = *this;
    if (h) out.h = [inner = h](double x) { return -inner(-x); };
    out.label = label == "zero" ? label : "mirror(" + label + ")";
    return out;
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_grid(const std::vector<double>& grid, const std::string& op) {
    detail::require(grid.size() >= 2, op, "grid needs at least two points");
    detail::require(grid.front() == 0.0, op, "grid must start at 0");
    detail::require(grid.back() > 0.0, op, "grid must have positive length");
    detail::require(is_uniform(grid), op, "grid must be uniform");
}

double step_of(const std::vector<double>& grid) { return grid.back() / static_cast<double>(grid.size() - 1); }

void check_noise(const NoiseSpec& n, const std::string& op) {
    detail::require(n.alpha > 1.0 && n.alpha < 2.0, op, "noise alpha must lie in (1, 2)");
    detail::require(n.alpha + n.theta.exponent() > 2.0, op, "requires alpha + theta exponent > 2");
    detail::require(n.f.exponent() + n.theta.exponent() > 1.0, op, "requires f exponent + theta exponent > 1");
    detail::require(n.theta.front_time() == 0.0 && n.f.front_time() == 0.0, op, "noise paths must start at t = 0");
    detail::require(n.theta.values().front() == 0.0, op, "requires theta_0 = 0");
}

std::string describe_initial(const InitialFn& xi) {
    return std::visit(Overloaded{
                          [](const initial::Constant& c) { return "constant(" + io::format_double(c.x0) + ")"; },
                          [](const initial::Sampled&) { return std::string("sampled"); },
                          [](const initial::KernelForm& k) { return "kernel(eta=" + io::format_double(k.eta) + ")"; },
                          [](const initial::ClosedForm& c) { return c.label; },
                      },
                      xi);
}

std::vector<std::pair<std::string, std::string>> base_meta(const FracIVP& p, const std::vector<double>& grid,
                                                           const std::string& scheme) {
    std::vector<std::pair<std::string, std::string>> meta{
        {"beta", io::format_double(p.beta)},
        {"A", io::format_double(p.a_coef)},
        {"scheme", scheme},
        {"n", std::to_string(grid.size() - 1)},
        {"T", io::format_double(grid.back())},
        {"h", p.nonlinearity.label},
        {"xi", describe_initial(p.initial)},
    };
    if (p.noise) meta.emplace_back("alpha", io::format_double(p.noise->alpha));
    return meta;
}

// Product-integration weights for (1/Γ(β)) ∫_0^{t_n} (t_n−s)^{β−1} φ(s) ds
// plus starting weights on φ_0..φ_{m+1} that keep the rule exact for 1 and s
// and make it exact for the non-integer powers s^{kβ} below 3/2 (at most four).
// Solutions behave like Σ c_k t^{kβ} near t = 0; without the starting
// weights the error there is O(h^{2β}).
class FractionalQuadrature {
public:
    FractionalQuadrature(const std::vector<double>& grid, double beta)
        : base_(step_of(grid), grid.size() - 1, quad::power_kernel(beta, rgamma(beta))) {
        const std::size_t steps = grid.size() - 1;
        const double h = step_of(grid);
        std::vector<double> gammas;
        for (int k = 1; k * beta < 1.5 - 1e-9 && gammas.size() < 4; ++k)
            if (std::abs(k * beta - std::round(k * beta)) > 1e-9) gammas.push_back(k * beta);
        if (gammas.empty() || gammas.size() + 2 > steps + 1) return;
        width_ = gammas.size() + 2;
        std::vector<double> exps{0.0, 1.0};
        exps.insert(exps.end(), gammas.begin(), gammas.end());
        Eigen::MatrixXd v(width_, width_);
        for (std::size_t k = 0; k < width_; ++k)
            for (std::size_t j = 0; j < width_; ++j)
                v(k, j) = k == 0 ? 1.0 : std::pow(static_cast<double>(j), exps[k]);
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(v);
        std::vector<std::vector<double>> powers(gammas.size(), std::vector<double>(steps + 1));
        for (std::size_t k = 0; k < gammas.size(); ++k)
            for (std::size_t i = 0; i <= steps; ++i) powers[k][i] = std::pow(grid[i], gammas[k]);
        corr_.assign((steps + 1) * width_, 0.0);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(width_);
        for (std::size_t n = 1; n <= steps; ++n) {
            for (std::size_t k = 0; k < gammas.size(); ++k) {
                // (1/Γ(β)) ∫_0^t (t−s)^{β−1} s^γ ds = t^{β+γ} Γ(γ+1)/Γ(β+γ+1).
                const double exact = std::pow(grid[n], beta + gammas[k]) * std::tgamma(gammas[k] + 1.0) *
                                     rgamma(beta + gammas[k] + 1.0);
                rhs(k + 2) = (exact - base_.convolve(powers[k], n)) / std::pow(h, gammas[k]);
            }
            const Eigen::VectorXd w = lu.solve(rhs);
            for (std::size_t j = 0; j < width_; ++j) corr_[n * width_ + j] = w(j);
        }
    }

    /// Number of leading unknowns φ_1..φ_m coupled through the starting weights.
    std::size_t start_size() const { return width_ == 0 ? 0 : width_ - 1; }
    double self_weight() const { return base_.self_weight(); }

    /// Everything except the lag-0 base weight on φ_n.
    double history(std::span<const double> phi, std::size_t n) const {
        double sum = base_.convolve_history(phi, n);
        for (std::size_t j = 0; j < width_; ++j) sum += corr_[n * width_ + j] * phi[j];
        return sum;
    }

    /// Full weight of φ_j in the rule for t_n.
    double weight(std::size_t n, std::size_t j) const {
        double w = j <= n ? base_.weight(n, n - j) : 0.0;
        if (j < width_) w += corr_[n * width_ + j];
        return w;
    }

    double apply(std::span<const double> phi, std::size_t n) const {
        return n == 0 ? 0.0 : base_.self_weight() * phi[n] + history(phi, n);
    }

private:
    quad::LagWeights base_;
    std::size_t width_ = 0;
    std::vector<double> corr_;  // [n * width + j]
};

}  // namespace

void FracIVP::validate() const {
    const std::string op = "FracIVP";
    detail::require(beta > 0.0 && beta < 1.0, op, "beta must lie in (0, 1)");
    detail::require(std::isfinite(a_coef), op, "A must be finite");
    if (nonlinearity.is_h1 || nonlinearity.is_h2)
        detail::require(a_coef + nonlinearity.lipschitz < 0.0, op, "(H1)/(H2) flagged but A + C < 0 fails");
    if (const auto* k = std::get_if<initial::KernelForm>(&initial)) {
        detail::require(k->eta > 0.0, op, "kernel-form eta must be > 0");
        detail::require(static_cast<bool>(k->g), op, "kernel-form g missing");
    }
    if (const auto* c = std::get_if<initial::ClosedForm>(&initial))
        detail::require(static_cast<bool>(c->xi), op, "closed-form xi missing");
    if (noise) check_noise(*noise, op);
}

std::vector<double> initial_on_grid(const InitialFn& xi, const std::vector<double>& grid) {
    std::vector<double> out(grid.size());
    std::visit(Overloaded{
                   [&](const initial::Constant& c) { std::fill(out.begin(), out.end(), c.x0); },
                   [&](const initial::Sampled& s) {
                       for (std::size_t i = 0; i < grid.size(); ++i) out[i] = s.path.at(grid[i]);
                   },
                   [&](const initial::ClosedForm& c) {
                       for (std::size_t i = 0; i < grid.size(); ++i) out[i] = c.xi(grid[i]);
                   },
                   [&](const initial::KernelForm& k) {
                       check_grid(grid, "initial_on_grid");
                       std::vector<double> g(grid.size());
                       for (std::size_t i = 0; i < grid.size(); ++i) g[i] = k.g(grid[i]);
                       const quad::LagWeights w(step_of(grid), grid.size() - 1, quad::power_kernel(k.eta, rgamma(k.eta)));
                       for (std::size_t n = 0; n < grid.size(); ++n) out[n] = w.convolve(g, n);
                   },
               },
               xi);
    for (double v : out) detail::require(std::isfinite(v), "initial_on_grid", "xi is not finite on the grid");
    return out;
}

std::vector<double> integrated_noise_on_grid(const NoiseSpec& noise, const std::vector<double>& grid) {
    check_noise(noise, "noise");
    const SampledPath tilde = cumulative_young(noise.f, noise.theta);
    const auto& t = tilde.times();
    bool same = t.size() == grid.size();
    for (std::size_t i = 0; same && i < t.size(); ++i) same = std::abs(t[i] - grid[i]) <= 1e-12 * grid.back();
    if (same) return tilde.values();
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = tilde.at(grid[i]);
    return out;
}

std::vector<double> noise_on_grid(const NoiseSpec& noise, const std::vector<double>& grid) {
    check_grid(grid, "noise");
    const auto tilde = integrated_noise_on_grid(noise, grid);
    const double a = noise.alpha;
    const quad::LagWeights w(step_of(grid), grid.size() - 1, quad::power_kernel(a - 1.0, (a - 1.0) * rgamma(a)));
    std::vector<double> z(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) z[n] = w.convolve(tilde, n);
    return z;
}

Trajectory solve_linear_closed_form(const FracIVP& p, const std::vector<double>& grid, const SchemeConfig& cfg) {
    const std::string op = "solve_linear_closed_form";
    p.validate();
    check_grid(grid, op);
    detail::require(p.nonlinearity.is_zero(), op, "closed form requires h = 0");
    const std::size_t steps = grid.size() - 1;
    const double h = step_of(grid);

    Trajectory out;
    out.grid = grid;
    out.values.assign(grid.size(), 0.0);
    if (const auto* k = std::get_if<initial::KernelForm>(&p.initial)) {
        std::vector<double> g(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) g[i] = k->g(grid[i]);
        const quad::LagWeights w(h, steps, quad::ml_kernel(p.beta, k->eta, p.a_coef, cfg.ml_tol));
        for (std::size_t n = 0; n <= steps; ++n) out.values[n] = w.convolve(g, n);
    } else {
        const auto xi = initial_on_grid(p.initial, grid);
        out.values = xi;
        if (p.a_coef != 0.0) {
            const quad::LagWeights w(h, steps, quad::ml_kernel(p.beta, p.beta, p.a_coef, cfg.ml_tol));
            for (std::size_t n = 0; n <= steps; ++n) out.values[n] += p.a_coef * w.convolve(xi, n);
        }
    }
    if (p.noise) {
        // ∫ K(t−s) dθ̃_s = ∫ K'(t−s) θ̃_s ds with K(u) = u^{α−1}E_{β,α}(Au^β), K(0) = 0.
        const auto tilde = integrated_noise_on_grid(*p.noise, grid);
        const quad::LagWeights w(h, steps, quad::ml_kernel(p.beta, p.noise->alpha - 1.0, p.a_coef, cfg.ml_tol));
        out.noise.resize(grid.size());
        for (std::size_t n = 0; n <= steps; ++n) {
            out.noise[n] = w.convolve(tilde, n);
            out.values[n] += out.noise[n];
        }
    }
    out.meta = base_meta(p, grid, "closed-form");
    out.defect = residual(p, out, cfg);
    return out;
}

namespace {

// y = known + c·(Ay + h(y)). Exact for h ≡ 0; otherwise fixed-point iteration
// from `guess`, then bisection on the step equation. Returns false if both fail.
bool solve_step(const FracIVP& p, const SchemeConfig& cfg, double known, double c, double guess, double& y,
                bool& bisected) {
    if (p.nonlinearity.is_zero()) {
        y = known / (1.0 - c * p.a_coef);
        return std::isfinite(y);
    }
    const auto drift = [&](double x) { return p.a_coef * x + p.nonlinearity(x); };
    double x = guess;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        const double next = known + c * drift(x);
        const double change = std::abs(next - x);
        x = next;
        if (!std::isfinite(x)) break;
        if (change <= cfg.corrector_tol) {
            y = x;
            return true;
        }
    }
    const auto phi = [&](double v) { return v - known - c * drift(v); };
    double lo = guess, hi = guess;
    bool bracketed = false;
    // Only roots near the previous value continue the trajectory; the step
    // equation can have far-off spurious roots once h is strongly nonlinear.
    const double reach = std::max(1.0, std::abs(guess));
    for (double width = 1e-3 * reach; width <= reach; width *= 2.0) {
        lo = guess - width;
        hi = guess + width;
        if (phi(lo) * phi(hi) <= 0.0) {
            bracketed = true;
            break;
        }
    }
    if (!bracketed) return false;
    double flo = phi(lo);
    for (int k = 0; k < 200 && hi - lo > 1e-2 * cfg.corrector_tol; ++k) {
        const double mid = 0.5 * (lo + hi);
        const double fm = phi(mid);
        if ((fm <= 0.0) == (flo <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    y = 0.5 * (lo + hi);
    bisected = true;
    return true;
}

}  // namespace

Trajectory solve_semilinear(const FracIVP& p, const std::vector<double>& grid, const SchemeConfig& cfg) {
    const std::string op = "solve_semilinear";
    p.validate();
    check_grid(grid, op);
    detail::require(cfg.corrector_tol > 0.0 && cfg.max_iterations > 0, op, "invalid corrector settings");
    const std::size_t steps = grid.size() - 1;
    const FractionalQuadrature q(grid, p.beta);
    const auto xi = initial_on_grid(p.initial, grid);
    std::vector<double> z = p.noise ? noise_on_grid(*p.noise, grid) : std::vector<double>(grid.size(), 0.0);
    const auto drift = [&](double x) { return p.a_coef * x + p.nonlinearity(x); };
    const double c = q.self_weight();

    std::vector<double> x(grid.size(), 0.0), f(grid.size(), 0.0);
    x[0] = xi[0] + z[0];
    f[0] = drift(x[0]);
    int bisected = 0;
    const auto fail = [&](std::size_t n) -> void {
        throw ConvergenceError(op + ": corrector and step bisection both failed at t = " + io::format_double(grid[n]));
    };
    const auto guard = [&](std::size_t n) {
        if (!std::isfinite(x[n]) || std::abs(x[n]) > cfg.blowup_bound)
            throw BlowUpError(op + ": |X| exceeded " + io::format_double(cfg.blowup_bound) + " at t = " +
                              io::format_double(grid[n]));
    };

    // The first m values enter every step through the starting weights, so
    // they form one coupled system, solved by Newton's method.
    const std::size_t m = q.start_size();
    if (m > 0) {
        const auto slope = [&](double y) {
            if (p.nonlinearity.is_zero()) return p.a_coef;
            const double d = 1e-7 * std::max(1.0, std::abs(y));
            return (drift(y + d) - drift(y - d)) / (2.0 * d);
        };
        Eigen::MatrixXd jac(m, m);
        Eigen::VectorXd res(m);
        for (std::size_t n = 1; n <= m; ++n) {
            x[n] = x[0];
            f[n] = f[0];
        }
        bool settled = false;
        for (int it = 0; it < 50 && !settled; ++it) {
            for (std::size_t n = 1; n <= m; ++n) {
                double sum = xi[n] + z[n];
                for (std::size_t j = 0; j <= m; ++j) sum += q.weight(n, j) * f[j];
                res(n - 1) = x[n] - sum;
                for (std::size_t j = 1; j <= m; ++j)
                    jac(n - 1, j - 1) = (n == j ? 1.0 : 0.0) - q.weight(n, j) * slope(x[j]);
            }
            const Eigen::VectorXd delta = jac.partialPivLu().solve(res);
            double change = 0.0;
            for (std::size_t n = 1; n <= m; ++n) {
                x[n] -= delta(n - 1);
                guard(n);
                f[n] = drift(x[n]);
                change = std::max(change, std::abs(delta(n - 1)));
            }
            settled = change <= 1e-3 * cfg.corrector_tol;
        }
        if (!settled) throw ConvergenceError(op + ": starting block did not converge");
    }

    for (std::size_t n = m + 1; n <= steps; ++n) {
        bool b = false;
        if (!solve_step(p, cfg, xi[n] + z[n] + q.history(f, n), c, x[n - 1], x[n], b)) fail(n);
        guard(n);
        f[n] = drift(x[n]);
        if (b) ++bisected;
    }

    Trajectory out;
    out.grid = grid;
    out.values = std::move(x);
    if (p.noise) out.noise = std::move(z);
    out.meta = base_meta(p, grid, "product-integration-pc");
    out.meta.emplace_back("corrector_tol", io::format_double(cfg.corrector_tol));
    if (bisected > 0) out.meta.emplace_back("bisected_steps", std::to_string(bisected));
    out.defect = residual(p, out, cfg);
    return out;
}

double residual(const FracIVP& p, const Trajectory& x, const SchemeConfig&) {
    const auto& grid = x.grid;
    check_grid(grid, "residual");
    detail::require(x.values.size() == grid.size(), "residual", "trajectory values do not match its grid");
    const FractionalQuadrature q(grid, p.beta);
    const auto xi = initial_on_grid(p.initial, grid);
    const auto z = p.noise ? noise_on_grid(*p.noise, grid) : std::vector<double>(grid.size(), 0.0);
    std::vector<double> f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) f[i] = p.a_coef * x.values[i] + p.nonlinearity(x.values[i]);
    double worst = 0.0;
    for (std::size_t n = 0; n < grid.size(); ++n)
        worst = std::max(worst, std::abs(x.values[n] - xi[n] - q.apply(f, n) - z[n]));
    return worst;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& x) {
    os << '#';
    for (const auto& [k, v] : x.meta) os << ' ' << k << '=' << v;
    os << '\n';
    const bool with_noise = !x.noise.empty();
    os << (with_noise ? "t,x,z\n" : "t,x\n");
    for (std::size_t i = 0; i < x.grid.size(); ++i) {
        os << io::format_double(x.grid[i]) << ',' << io::format_double(x.values[i]);
        if (with_noise) os << ',' << io::format_double(x.noise[i]);
        os << '\n';
    }
}

}  // namespace fracstab
