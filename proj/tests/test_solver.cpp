#include "fracstab/errors.hpp"
#include "fracstab/fbm.hpp"
#include "fracstab/mittag_leffler.hpp"
#include "fracstab/solver.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace fracstab;

namespace {

FracIVP linear(double beta, double a, double x0) {
    FracIVP p;
    p.beta = beta;
    p.a_coef = a;
    p.initial = initial::Constant{x0};
    return p;
}

Nonlinearity saturating(double c) {
    Nonlinearity n;
    n.h = [c](double x) { return x >= 0.0 ? 1.0 - std::exp(-c * x) : std::exp(c * x) - 1.0; };
    n.lipschitz = c;
    n.is_h2 = true;
    n.monotone = true;
    n.label = "saturating";
    return n;
}

double max_error(const Trajectory& x, double beta, double a, double x0) {
    double worst = 0.0;
    for (std::size_t i = 0; i < x.grid.size(); ++i)
        worst = std::max(worst, std::abs(x.values[i] - x0 * ml::eval(beta, 1.0, a * std::pow(x.grid[i], beta), 1e-13)));
    return worst;
}

}  // namespace

TEST_CASE("closed form, constant initial value") {
    const auto x = solve_linear_closed_form(linear(0.5, -1.0, 1.0), uniform_grid(1.0, 64));
    CHECK(x.values.back() == doctest::Approx(0.42758357615580700).epsilon(1e-12));
    CHECK(max_error(x, 0.5, -1.0, 1.0) < 1e-12);

    const auto flat = solve_linear_closed_form(linear(0.3, 0.0, 2.5), uniform_grid(3.0, 10));
    for (double v : flat.values) CHECK(v == 2.5);
}

TEST_CASE("closed form, kernel-form initial value") {
    FracIVP p = linear(0.5, -1.0, 0.0);
    p.initial = initial::KernelForm{0.5, [](double) { return 1.0; }};
    const auto x = solve_linear_closed_form(p, uniform_grid(1.0, 32));
    // t^β E_{β,β+1}(−t^β) at t = 1.
    CHECK(x.values.back() == doctest::Approx(0.5724164237334).epsilon(1e-10));
    CHECK(x.values.front() == 0.0);
}

TEST_CASE("closed form rejects a nonlinearity") {
    FracIVP p = linear(0.5, -1.0, 1.0);
    p.nonlinearity = saturating(0.1);
    CHECK_THROWS_AS(solve_linear_closed_form(p, uniform_grid(1.0, 8)), DomainError);
}

TEST_CASE("FracIVP validation") {
    CHECK_THROWS_AS(linear(1.0, -1.0, 1.0).validate(), DomainError);
    CHECK_THROWS_AS(linear(0.0, -1.0, 1.0).validate(), DomainError);
    FracIVP p = linear(0.5, -0.2, 1.0);
    p.nonlinearity = saturating(0.5);
    CHECK_THROWS_AS(p.validate(), DomainError);
    CHECK_THROWS_AS(solve_semilinear(linear(0.5, -1.0, 1.0), {0.0, 0.1, 0.5}), DomainError);
}

TEST_CASE("semilinear with h = 0 matches the closed form") {
    const auto x = solve_semilinear(linear(0.5, -1.0, 1.0), uniform_grid(1.0, 4096));
    CHECK(std::abs(x.values.back() - 0.427583576155807) < 1e-3);
    CHECK(max_error(x, 0.5, -1.0, 1.0) < 1e-3);
    CHECK(x.defect <= 1e-8);

    const auto flat = solve_semilinear(linear(0.7, 0.0, 0.3), uniform_grid(2.0, 50));
    for (double v : flat.values) CHECK(v == 0.3);
}

TEST_CASE("convergence order against the closed form") {
    for (double beta : {0.3, 0.5, 0.8}) {
        std::vector<double> lx, ly;
        for (int k = 7; k <= 12; ++k) {
            const std::size_t n = std::size_t{1} << k;
            const auto x = solve_semilinear(linear(beta, -1.0, 1.0), uniform_grid(1.0, n));
            lx.push_back(std::log(1.0 / n));
            ly.push_back(std::log(max_error(x, beta, -1.0, 1.0)));
        }
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i] / lx.size();
            my += ly[i] / ly.size();
        }
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxy += (lx[i] - mx) * (ly[i] - my);
            sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        CAPTURE(beta);
        CHECK(sxy / sxx >= std::min(1.0, 2.0 - beta) - 0.2);
        CHECK(std::exp(ly.back()) <= 1e-3);
    }
}

TEST_CASE("residual") {
    const auto grid = uniform_grid(1.0, 16);
    Trajectory zero;
    zero.grid = grid;
    zero.values.assign(grid.size(), 0.0);
    CHECK(residual(linear(0.5, -1.0, 1.0), zero) == doctest::Approx(1.0));

    const auto p = linear(0.5, -1.0, 1.0);
    const auto exact = solve_linear_closed_form(p, uniform_grid(1.0, 4096));
    CHECK(residual(p, exact) <= 1e-6);
}

TEST_CASE("positivity under the saturating nonlinearity") {
    FracIVP p = linear(0.7, -1.0, 0.1);
    p.nonlinearity = saturating(0.5);
    const auto x = solve_semilinear(p, uniform_grid(20.0, 2000));
    for (double v : x.values) {
        CHECK(v > 0.0);
        CHECK(v <= 0.1);
    }
    CHECK(x.defect <= 1e-8);
}

TEST_CASE("sign symmetry") {
    FracIVP p = linear(0.6, -1.0, 0.4);
    p.nonlinearity = saturating(0.5);
    FracIVP q = p;
    q.initial = initial::Constant{-0.4};
    q.nonlinearity = p.nonlinearity.mirrored();
    const auto grid = uniform_grid(5.0, 500);
    const auto x = solve_semilinear(p, grid);
    const auto y = solve_semilinear(q, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(x.values[i] + y.values[i]) <= 1e-10);
}

TEST_CASE("linear superposition") {
    const auto grid = uniform_grid(4.0, 400);
    FracIVP p1 = linear(0.4, -0.8, 0.0), p2 = p1, p12 = p1;
    p1.initial = initial::ClosedForm{[](double t) { return std::cos(t); }, "cos"};
    p2.initial = initial::ClosedForm{[](double t) { return t / (1 + t); }, "ratio"};
    p12.initial = initial::ClosedForm{[](double t) { return std::cos(t) + t / (1 + t); }, "sum"};
    const auto a = solve_semilinear(p1, grid), b = solve_semilinear(p2, grid), c = solve_semilinear(p12, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(c.values[i] - a.values[i] - b.values[i]) <= 1e-10);
}

TEST_CASE("noise: closed form and time stepper agree") {
    const auto grid = uniform_grid(1.0, 1024);
    FracIVP p = linear(0.6, -1.0, 0.5);
    p.noise = NoiseSpec{1.5, SampledPath::from_function(grid, [](double s) { return std::exp(-s); }, 1.0),
                        fbm_sample({0.8, grid, 17}), {}};
    const auto a = solve_linear_closed_form(p, grid);
    const auto b = solve_semilinear(p, grid);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
    CHECK(worst < 5e-3);
    CHECK(b.defect <= 1e-8);
    CHECK(a.noise.size() == grid.size());
}

TEST_CASE("divergence fails loudly") {
    // E_{1/2,1}(2√t) grows like e^{4t}.
    CHECK_THROWS_AS(solve_semilinear(linear(0.5, 2.0, 1.0), uniform_grid(5.0, 500)), BlowUpError);

    FracIVP p = linear(0.5, 2.0, 1.0);
    Nonlinearity cube;
    cube.h = [](double x) { return x * x * x; };
    cube.label = "cube";
    p.nonlinearity = cube;
    CHECK_THROWS_AS(solve_semilinear(p, uniform_grid(5.0, 500)), NumericError);
}

TEST_CASE("trajectory CSV") {
    const auto x = solve_semilinear(linear(0.5, -1.0, 1.0), uniform_grid(1.0, 4));
    std::ostringstream os;
    write_trajectory_csv(os, x);
    const std::string s = os.str();
    CHECK(s.rfind("# beta=0.5 A=-1 scheme=product-integration-pc", 0) == 0);
    CHECK(s.find("\nt,x\n0,1\n") != std::string::npos);
}
