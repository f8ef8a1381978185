#include "fracstab/comparison.hpp"

#include "fracstab/errors.hpp"
#include "fracstab/io.hpp"
#include "fracstab/mittag_leffler.hpp"
#include "fracstab/product_integration.hpp"

#include <algorithm>
#include <cmath>

namespace fracstab {

namespace {

std::vector<double> y_on_grid(const ComparisonProblem& cp, const std::vector<double>& grid) {
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = cp.y.at(grid[i]);
    return out;
}

void check_grid(const ComparisonProblem& cp, const std::vector<double>& grid, const std::string& op) {
    detail::require(grid.size() >= 2 && grid.front() == 0.0, op, "grid must start at 0 with at least two points");
    detail::require(is_uniform(grid), op, "grid must be uniform");
    detail::require(std::abs(grid.back() - cp.horizon) <= 1e-12 * cp.horizon, op, "grid must end at the horizon T");
}

quad::LagWeights kernel_weights(const ComparisonProblem& cp, const std::vector<double>& grid, double ml_tol) {
    const double h = grid.back() / static_cast<double>(grid.size() - 1);
    return quad::LagWeights(h, grid.size() - 1, quad::ml_kernel(cp.beta, cp.beta, cp.b_coef, ml_tol));
}

// M̄ = max of E_{β,β}(B s^β) over [0, len].
double kernel_bound(const ComparisonProblem& cp, double len, double ml_tol) {
    if (cp.b_coef <= 0.0) return rgamma(cp.beta);
    double best = 0.0;
    for (int i = 0; i < 64; ++i) {
        const double s = len * i / 63.0;
        best = std::max(best, ml::eval(cp.beta, cp.beta, cp.b_coef * std::pow(s, cp.beta), ml_tol));
    }
    return best;
}

// y_n + Σ_m W_n(m) k(t_{n−m}, v_{n−m}) − v_n.
std::vector<double> defect(const ComparisonProblem& cp, const quad::LagWeights& w, const std::vector<double>& grid,
                           const std::vector<double>& v) {
    const auto y = y_on_grid(cp, grid);
    std::vector<double> kv(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) kv[j] = cp.k(grid[j], v[j]);
    std::vector<double> out(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) out[n] = y[n] + w.convolve(kv, n) - v[n];
    return out;
}

}  // namespace

void ComparisonProblem::validate() const {
    const std::string op = "ComparisonProblem";
    detail::require(beta > 0.0 && beta < 1.0, op, "beta must lie in (0, 1)");
    detail::require(std::isfinite(b_coef), op, "B must be finite");
    detail::require(static_cast<bool>(k.k), op, "kernel nonlinearity k missing");
    detail::require(k.lipschitz > 0.0 && std::isfinite(k.lipschitz), op, "Lipschitz constant M must be finite and > 0");
    detail::require(k.nondecreasing, op, "k must be non-decreasing in x");
    detail::require(horizon > 0.0, op, "horizon T must be > 0");
    detail::require(y.front_time() <= 0.0 && y.back_time() >= horizon * (1.0 - 1e-12), op, "y must cover [0, T]");
}

MajorantResult majorant_solve(const ComparisonProblem& cp, const std::vector<double>& grid,
                              const PicardOptions& opts) {
    const std::string op = "majorant_solve";
    cp.validate();
    check_grid(cp, grid, op);
    detail::require(opts.tol > 0.0 && opts.max_iterations > 0, op, "invalid Picard settings");
    detail::require(opts.safety > 0.0 && opts.safety < 1.0, op, "safety factor must lie in (0, 1)");
    if (opts.seed) detail::require(opts.seed->size() == grid.size(), op, "seed must live on the grid");

    const std::size_t steps = grid.size() - 1;
    const double h = grid.back() / static_cast<double>(steps);
    const double m = cp.k.lipschitz;
    const auto w = kernel_weights(cp, grid, opts.ml_tol);
    const auto y = y_on_grid(cp, grid);

    // Longest window with T̄^β M M̄ / β <= safety.
    double len = std::pow(opts.safety * cp.beta / (m * rgamma(cp.beta)), 1.0 / cp.beta);
    double mbar = kernel_bound(cp, len, opts.ml_tol);
    for (int i = 0; i < 400 && std::pow(len, cp.beta) * m * mbar / cp.beta > opts.safety; ++i) {
        len *= 0.9;
        mbar = kernel_bound(cp, len, opts.ml_tol);
    }
    const auto window = static_cast<std::size_t>(std::floor(len / h * (1.0 + 1e-12)));
    if (window < 1)
        throw DomainError(op + ": contraction window underflow (window " + io::format_double(len) +
                          " shorter than grid step " + io::format_double(h) + ")");

    MajorantResult res;
    auto& diag = res.diagnostics;
    diag.kernel_bound = mbar;
    std::vector<double> u(grid.size());
    u[0] = y[0];
    std::vector<double> ku(grid.size());
    ku[0] = cp.k(grid[0], u[0]);

    for (std::size_t a = 0; a < steps; a += window) {
        const std::size_t b = std::min(steps, a + window);
        const double span = (b - a) * h;
        diag.window_lengths.push_back(span);
        diag.contraction = std::max(diag.contraction, std::pow(span, cp.beta) * m * kernel_bound(cp, span, opts.ml_tol) / cp.beta);

        std::vector<double> fixed(b - a);
        for (std::size_t n = a + 1; n <= b; ++n) {
            double sum = y[n];
            for (std::size_t j = 0; j <= a; ++j) sum += w.weight(n, n - j) * ku[j];
            fixed[n - a - 1] = sum;
        }
        std::vector<double> v(b - a), kv(b - a), next(b - a);
        for (std::size_t n = a + 1; n <= b; ++n) v[n - a - 1] = opts.seed ? (*opts.seed)[n] : y[n];
        int it = 0;
        bool done = false;
        while (!done) {
            if (it == opts.max_iterations)
                throw ConvergenceError(op + ": Picard iteration did not converge on window starting at t = " +
                                       io::format_double(grid[a]));
            ++it;
            for (std::size_t i = 0; i < v.size(); ++i) kv[i] = cp.k(grid[a + 1 + i], v[i]);
            double change = 0.0;
            for (std::size_t n = a + 1; n <= b; ++n) {
                double sum = fixed[n - a - 1];
                for (std::size_t j = a + 1; j <= n; ++j) sum += w.weight(n, n - j) * kv[j - a - 1];
                next[n - a - 1] = sum;
                const double d = sum - v[n - a - 1];
                change = std::max(change, std::abs(d));
                diag.max_decrease = std::min(diag.max_decrease, d);
                if (!std::isfinite(sum)) throw ConvergenceError(op + ": Picard iterate is not finite");
            }
            v.swap(next);
            done = change <= opts.tol;
        }
        diag.iterations.push_back(it);
        for (std::size_t n = a + 1; n <= b; ++n) {
            u[n] = v[n - a - 1];
            ku[n] = cp.k(grid[n], u[n]);
        }
    }

    res.u.grid = grid;
    res.u.values = std::move(u);
    res.u.meta = {{"beta", io::format_double(cp.beta)},
                  {"B", io::format_double(cp.b_coef)},
                  {"scheme", "picard-windows"},
                  {"n", std::to_string(steps)},
                  {"T", io::format_double(grid.back())},
                  {"k", cp.k.label},
                  {"windows", std::to_string(diag.window_lengths.size())}};
    diag.residual = majorant_residual(cp, res.u, opts.ml_tol);
    res.u.defect = diag.residual;
    return res;
}

double majorant_residual(const ComparisonProblem& cp, const Trajectory& u, double ml_tol) {
    check_grid(cp, u.grid, "majorant_residual");
    const auto w = kernel_weights(cp, u.grid, ml_tol);
    double worst = 0.0;
    for (double d : defect(cp, w, u.grid, u.values)) worst = std::max(worst, std::abs(d));
    return worst;
}

DominationReport domination_check(const Trajectory& x, const ComparisonProblem& cp, const Trajectory& u, double tol) {
    const std::string op = "domination_check";
    check_grid(cp, x.grid, op);
    detail::require(u.values.size() == x.values.size() && x.values.size() == x.grid.size(), op,
                    "x and u must share the grid");
    const auto w = kernel_weights(cp, x.grid, 1e-13);
    DominationReport rep;
    const auto slack = defect(cp, w, x.grid, x.values);
    rep.hypothesis_margin = *std::min_element(slack.begin(), slack.end());
    rep.hypothesis_violated = rep.hypothesis_margin < -tol;
    rep.min_margin = u.values[0] - x.values[0];
    for (std::size_t i = 0; i < x.values.size(); ++i) rep.min_margin = std::min(rep.min_margin, u.values[i] - x.values[i]);
    rep.holds = !rep.hypothesis_violated && rep.min_margin >= -tol;
    return rep;
}

DominationReport domination_check(const Trajectory& x, const ComparisonProblem& cp, double tol) {
    return domination_check(x, cp, majorant_solve(cp, x.grid).u, tol);
}

}  // namespace fracstab
