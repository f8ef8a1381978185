#include "fracstab/comparison.hpp"
#include "fracstab/errors.hpp"
#include "fracstab/mittag_leffler.hpp"

#include <doctest.h>

#include <cmath>

using namespace fracstab;

namespace {

ComparisonKernel linear_k(double c) {
    ComparisonKernel k;
    k.k = [c](double, double x) { return c * x; };
    k.lipschitz = c;
    k.label = "linear";
    return k;
}

ComparisonProblem problem(const std::vector<double>& grid, const std::function<double(double)>& y, double b,
                          double beta, ComparisonKernel k) {
    return {SampledPath::from_function(grid, y, 1.0), b, beta, std::move(k), grid.back()};
}

}  // namespace

TEST_CASE("k = 0 returns y") {
    const auto grid = uniform_grid(2.0, 100);
    ComparisonKernel zero;
    zero.k = [](double, double) { return 0.0; };
    const auto cp = problem(grid, [](double t) { return std::sin(t); }, -1.0, 0.5, zero);
    const auto res = majorant_solve(cp, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(res.u.values[i] == std::sin(grid[i]));
}

TEST_CASE("y = 0 with linear k gives u = 0") {
    const auto grid = uniform_grid(3.0, 200);
    const auto res = majorant_solve(problem(grid, [](double) { return 0.0; }, -1.0, 0.6, linear_k(0.5)), grid);
    for (double v : res.u.values) CHECK(v == 0.0);
}

TEST_CASE("Gronwall envelope matches the linear solution with coefficient A + C") {
    // y = x0 E_β(A t^β), k = Cx, B = A  ⇒  u = x0 E_β((A+C) t^β).
    const double beta = 0.5, a = -1.0, c = 0.5, x0 = 1.0;
    const auto grid = uniform_grid(1.0, 4096);
    const auto cp = problem(
        grid, [=](double t) { return x0 * ml::eval(beta, 1.0, a * std::pow(t, beta), 1e-13); }, a, beta, linear_k(c));
    const auto res = majorant_solve(cp, grid);
    FracIVP p;
    p.beta = beta;
    p.a_coef = a + c;
    p.initial = initial::Constant{x0};
    const auto v = solve_semilinear(p, grid);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, std::abs(res.u.values[i] - v.values[i]));
    CHECK(worst <= 1e-4);
    CHECK(res.diagnostics.residual <= 1e-8);
    CHECK(res.diagnostics.contraction <= 0.9);
}

TEST_CASE("windows respect the contraction rule") {
    const auto grid = uniform_grid(4.0, 2000);
    for (double b : {-2.0, 0.0, 0.1}) {
        const auto cp = problem(grid, [](double t) { return 1.0 + 0.1 * t; }, b, 0.4, linear_k(0.5));
        const auto res = majorant_solve(cp, grid);
        CAPTURE(b);
        CHECK(res.diagnostics.window_lengths.size() > 1);
        CHECK(res.diagnostics.contraction <= 0.9);
        CHECK(res.diagnostics.residual <= 1e-8);
    }
}

TEST_CASE("window underflow and invalid problems") {
    const auto grid = uniform_grid(1.0, 4);
    CHECK_THROWS_AS(majorant_solve(problem(grid, [](double) { return 1.0; }, -1.0, 0.5, linear_k(1e4)), grid),
                    DomainError);
    auto bad = linear_k(1.0);
    bad.nondecreasing = false;
    CHECK_THROWS_AS(majorant_solve(problem(grid, [](double) { return 1.0; }, -1.0, 0.5, bad), grid), DomainError);
    CHECK_THROWS_AS(majorant_solve(problem(grid, [](double) { return 1.0; }, -1.0, 1.5, linear_k(1.0)), grid),
                    DomainError);
}

TEST_CASE("Picard iterates seeded below u increase monotonically") {
    const auto grid = uniform_grid(4.0, 800);
    ComparisonKernel k;
    k.k = [](double s, double x) { return 0.8 * std::tanh(x) + 0.1 * std::cos(s); };
    k.lipschitz = 0.8;
    const auto y = [](double t) { return 0.5 + 0.2 * std::sin(2 * t); };
    const auto cp = problem(grid, y, -0.7, 0.6, k);
    // x solves the same equation with y − d, d >= 0, so it satisfies the inequality.
    const auto lower = problem(grid, [&](double t) { return y(t) - 0.05 * (1 + t); }, -0.7, 0.6, k);
    const auto x = majorant_solve(lower, grid).u;
    PicardOptions opts;
    opts.seed = x.values;
    const auto res = majorant_solve(cp, grid, opts);
    CHECK(res.diagnostics.max_decrease >= -1e-10);
    const auto rep = domination_check(x, cp, res.u);
    CHECK_FALSE(rep.hypothesis_violated);
    CHECK(rep.holds);
    CHECK(rep.min_margin > 0.0);
}

TEST_CASE("domination_check examples") {
    const auto grid = uniform_grid(2.0, 400);
    const auto cp = problem(grid, [](double t) { return 1.0 + t; }, -1.0, 0.5, linear_k(0.3));
    const auto u = majorant_solve(cp, grid).u;

    const auto same = domination_check(u, cp, u);
    CHECK(same.holds);
    CHECK(std::abs(same.min_margin) < 1e-12);

    Trajectory lower = u;
    for (double& v : lower.values) v -= 0.1;
    const auto below = domination_check(lower, cp, u);
    CHECK(below.holds);
    CHECK(below.min_margin == doctest::Approx(0.1));

    Trajectory upper = u;
    for (double& v : upper.values) v += 0.1;
    const auto above = domination_check(upper, cp);
    CHECK(above.hypothesis_violated);
    CHECK_FALSE(above.holds);
}
