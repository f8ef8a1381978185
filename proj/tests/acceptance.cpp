// Acceptance driver: one PASS/FAIL line per criterion, non-zero exit if any fails.
#include "fracstab/cli.hpp"
#include "fracstab/comparison.hpp"
#include "fracstab/fbm.hpp"
#include "fracstab/mittag_leffler.hpp"
#include "fracstab/paths.hpp"
#include "fracstab/solver.hpp"
#include "fracstab/stability_lab.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <unistd.h>

using namespace fracstab;
using namespace fracstab::lab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void fail(const std::string& what) {
        if (pass) detail.str("");
        pass = false;
        detail << what << "; ";
    }
};

double slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / x.size();
        my += y[i] / y.size();
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

constexpr double kMlTol = 1e-12;

// ---------------------------------------------------------------------------

void ml_identities(Outcome& o) {
    std::mt19937_64 rng(101);
    double worst_d = 0.0, worst_i = 0.0;
    for (int k = 0; k < 50; ++k) {
        const double a = uniform(rng, 0.01, 1.0), b = uniform(rng, 1.0, 2.0);
        const double lam = uniform(rng, -5.0, 0.0), t = uniform(rng, 0.2, 3.0);
        const auto F = [&](double s) { return ml::kernel(s, lam, a, b, kMlTol); };
        const double exact = std::pow(t, b - 2.0) * ml::eval(a, b - 1.0, lam * std::pow(t, a), kMlTol);
        // Five-point stencil; truncation O(h⁴), rounding ~1e-14/h.
        const double h = 1e-3 * t;
        const double fd = (-F(t + 2 * h) + 8 * F(t + h) - 8 * F(t - h) + F(t - 2 * h)) / (12 * h);
        const double rd = std::abs(fd - exact) / std::abs(exact);
        worst_d = std::max(worst_d, rd);
        if (rd > 1e-5) {
            std::ostringstream os;
            os << "derivative a=" << a << " b=" << b << " lambda=" << lam << " t=" << t << " rel=" << rd;
            o.fail(os.str());
        }
    }
    boost::math::quadrature::tanh_sinh<double> ts;
    for (int k = 0; k < 50; ++k) {
        const double a = uniform(rng, 0.01, 1.0), b = uniform(rng, 1.0, 2.0);
        const double lam = uniform(rng, -5.0, 0.0), t = uniform(rng, 0.2, 3.0);
        const double quad = ts.integrate([&](double s) { return ml::kernel(s, lam, a, b, kMlTol); }, 0.0, t, 1e-12);
        const double exact = std::pow(t, b) * ml::eval(a, b + 1.0, lam * std::pow(t, a), kMlTol);
        const double ri = std::abs(quad - exact) / std::abs(exact);
        worst_i = std::max(worst_i, ri);
        if (ri > 1e-6) {
            std::ostringstream os;
            os << "integral a=" << a << " b=" << b << " lambda=" << lam << " t=" << t << " rel=" << ri;
            o.fail(os.str());
        }
    }
    if (o.pass) o.detail << "worst derivative rel " << worst_d << ", worst integral rel " << worst_i;
}

void complete_monotonicity(Outcome& o) {
    const std::vector<std::pair<double, double>> pairs{
        {0.1, 0.1}, {0.1, 1.0}, {0.2, 0.5},  {0.25, 2.0}, {0.3, 0.3}, {0.4, 1.0}, {0.5, 0.5},
        {0.5, 1.0}, {0.5, 1.5}, {0.6, 0.9},  {0.7, 0.7},  {0.7, 1.0}, {0.75, 3.0}, {0.8, 0.8},
        {0.8, 1.8}, {0.9, 1.0}, {0.95, 2.5}, {1.0, 1.0},  {1.0, 2.0}, {1.0, 4.0}};
    const auto grid = uniform_grid(100.0, 199);
    int violations = 0;
    double worst = 0.0;
    for (const auto& [a, b] : pairs) {
        std::vector<double> v;
        for (double x : grid) v.push_back(ml::eval(a, b, -x, 1e-13));
        for (std::size_t i = 0; i < v.size(); ++i) {
            double slack = v[i];
            if (i + 1 < v.size()) slack = std::min(slack, v[i] - v[i + 1] + 1e-10);
            if (i + 2 < v.size()) slack = std::min(slack, v[i] - 2 * v[i + 1] + v[i + 2] + 1e-10);
            if (!(v[i] > 0.0) || slack < 0.0) {
                ++violations;
                worst = std::min(worst, slack);
            }
        }
    }
    if (violations > 0) o.fail(std::to_string(violations) + " violations, worst slack " + std::to_string(worst));
    else o.detail << pairs.size() << " pairs, 200 points each, no violations";
}

void young(Outcome& o) {
    std::vector<double> lx, ly;
    for (int k = 6; k <= 14; ++k) {
        const std::size_t n = std::size_t{1} << k;
        const auto grid = uniform_grid(1.0, n);
        const auto f = SampledPath::from_function(grid, [](double u) { return u; }, 1.0);
        const auto g = SampledPath::from_function(grid, [](double u) { return u * u; }, 1.0);
        lx.push_back(std::log(1.0 / n));
        ly.push_back(std::log(std::abs(young_integral(f, g, 0.0, 1.0) - 2.0 / 3.0)));
    }
    const double s = slope(lx, ly);
    if (s < 0.9) o.fail("convergence slope " + std::to_string(s));

    std::mt19937_64 rng(303);
    int violations = 0;
    for (int k = 0; k < 100; ++k) {
        const auto grid = uniform_grid(1.0, 512);
        std::optional<SampledPath> f, g;
        if (k % 2 == 0) {
            const double c1 = uniform(rng, -2, 2), w1 = uniform(rng, 0.5, 8), c2 = uniform(rng, -2, 2),
                         w2 = uniform(rng, 0.5, 8);
            f = SampledPath::from_function(grid, [=](double u) { return c1 * std::sin(w1 * u) + u; }, 1.0);
            g = SampledPath::from_function(grid, [=](double u) { return c2 * std::cos(w2 * u) * std::exp(-u); }, 1.0);
        } else {
            const double h1 = uniform(rng, 0.6, 0.95), h2 = uniform(rng, 0.6, 0.95);
            f = fbm_sample({h1, grid, 1000u + static_cast<std::uint64_t>(k)});
            g = fbm_sample({h2, grid, 2000u + static_cast<std::uint64_t>(k)});
        }
        double s0 = uniform(rng, 0.0, 0.9), t0 = uniform(rng, 0.0, 1.0);
        if (s0 > t0) std::swap(s0, t0);
        if (t0 - s0 < 0.05) t0 = std::min(1.0, s0 + 0.05);
        if (std::abs(young_integral(*f, *g, s0, t0)) > young_bound(*f, *g, s0, t0)) ++violations;
    }
    if (violations > 0) o.fail(std::to_string(violations) + " bound violations");
    if (o.pass) o.detail << "slope " << s << ", 100 bound instances, no violations";
}

void solver_vs_closed_form(Outcome& o) {
    for (double beta : {0.3, 0.5, 0.8}) {
        FracIVP p;
        p.beta = beta;
        p.a_coef = -1.0;
        p.initial = initial::Constant{1.0};
        std::vector<double> lx, ly;
        for (int k = 7; k <= 12; ++k) {
            const std::size_t n = std::size_t{1} << k;
            const auto grid = uniform_grid(1.0, n);
            const auto x = solve_semilinear(p, grid);
            double err = 0.0;
            for (std::size_t i = 0; i < grid.size(); ++i)
                err = std::max(err, std::abs(x.values[i] - ml::eval(beta, 1.0, -std::pow(grid[i], beta), kMlTol)));
            lx.push_back(std::log(1.0 / n));
            ly.push_back(std::log(err));
        }
        const double s = slope(lx, ly), err = std::exp(ly.back());
        const double need = std::min(1.0, 2.0 - beta) - 0.2;
        if (err > 1e-3 || s < need) {
            std::ostringstream os;
            os << "beta=" << beta << " error " << err << " slope " << s << " (need " << need << ")";
            o.fail(os.str());
        }
        o.detail << "beta " << beta << ": err " << err << " slope " << s << "; ";
    }
}

void positivity_envelope(Outcome& o) {
    const double beta = 0.7, a = -1.0, c = 0.5;
    const auto grid = uniform_grid(20.0, 2000);
    for (double x0 : {0.01, 0.1}) {
        FracIVP p;
        p.beta = beta;
        p.a_coef = a;
        p.nonlinearity = example_nonlinearity(c);
        p.initial = initial::Constant{x0};
        const auto x = solve_semilinear(p, grid);
        const auto pos = positivity_check(x);
        const auto env = ml_envelope_check(x, 2.0 * x0, 1.0, a + c, beta);
        const auto bnd = bound_check(x, x0);
        std::ostringstream os;
        os << "x0=" << x0 << " min " << pos.margin << " envelope margin " << env.margin << " bound margin "
           << bnd.margin;
        if (!pos.holds || !env.holds || env.margin < 0.0 || !bnd.holds) o.fail(os.str());
        else o.detail << os.str() << "; ";
    }
}

void comparison(Outcome& o) {
    std::mt19937_64 rng(606);
    double worst_res = 0.0, worst_dec = 0.0, worst_margin = 1e300;
    for (int k = 0; k < 50; ++k) {
        const double beta = uniform(rng, 0.3, 0.9), b = uniform(rng, -2.0, 0.2), horizon = uniform(rng, 1.0, 4.0);
        const double m = uniform(rng, 0.1, 1.0), d = uniform(rng, 0.0, 0.3);
        const double y0 = uniform(rng, 0.2, 1.0), y1 = uniform(rng, -0.3, 0.3), w = uniform(rng, 0.5, 3.0);
        const double gap = uniform(rng, 0.01, 0.2);
        const auto grid = uniform_grid(horizon, 400);
        ComparisonKernel kern;
        if (k % 2 == 0) kern.k = [=](double s, double x) { return m * std::tanh(x) + d * std::cos(s); };
        else kern.k = [=](double s, double x) { return m * x + d * std::exp(-s); };
        kern.lipschitz = m;
        const auto y = [=](double t) { return y0 + y1 * std::sin(w * t); };
        const ComparisonProblem cp{SampledPath::from_function(grid, y, 1.0), b, beta, kern, horizon};
        // x solves the same equation with a smaller inhomogeneity, so the
        // integral inequality holds for it.
        const ComparisonProblem lower{
            SampledPath::from_function(grid, [=](double t) { return y(t) - gap * (1 + t); }, 1.0), b, beta, kern,
            horizon};
        const auto x = majorant_solve(lower, grid).u;
        PicardOptions opts;
        opts.seed = x.values;
        const auto res = majorant_solve(cp, grid, opts);
        const auto rep = domination_check(x, cp, res.u);
        worst_res = std::max(worst_res, res.diagnostics.residual);
        worst_dec = std::min(worst_dec, res.diagnostics.max_decrease);
        worst_margin = std::min(worst_margin, rep.min_margin);
        if (rep.hypothesis_violated || !rep.holds || res.diagnostics.max_decrease < -1e-10 ||
            res.diagnostics.residual > 1e-8) {
            std::ostringstream os;
            os << "instance " << k << " holds=" << rep.holds << " decrease " << res.diagnostics.max_decrease
               << " residual " << res.diagnostics.residual;
            o.fail(os.str());
        }
    }
    if (o.pass)
        o.detail << "min margin " << worst_margin << ", max residual " << worst_res << ", worst decrease "
                 << worst_dec;
}

double bump(double t, double centre, double width) {
    const double x = (t - centre) / width;
    return std::exp(-0.5 * x * x) / (width * std::sqrt(2.0 * std::numbers::pi));
}

void class_bounds(Outcome& o) {
    std::mt19937_64 rng(707);
    const double horizon = 30.0;
    const auto grid = uniform_grid(horizon, 3000);
    const auto long_grid = uniform_grid(200.0, 4000);
    double worst = 1e300;
    int decayed = 0;
    for (int k = 0; k < 10; ++k) {
        const double beta = uniform(rng, 0.4, 0.9), a = uniform(rng, -2.0, -0.5);
        const double w = uniform(rng, 0.5, 3.0), c = uniform(rng, 0.05, 0.5), lim = uniform(rng, -1.0, 1.0);
        const XiExample ex{uniform(rng, 0.1, beta - 0.05), uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 2.0)};
        const double eta = uniform(rng, 0.5, beta + 0.9), p = std::max(2.0, 1.5 / eta);
        const double centre = uniform(rng, 1.0, 6.0), width = uniform(rng, 0.3, 1.5);
        const double amp = uniform(rng, 0.5, 2.0), support = uniform(rng, 1.0, 4.0);
        const std::vector<std::pair<std::string, ICClass>> cases{
            {"E1", ICClass::e1(SampledPath::from_function(
                                   grid, [=](double t) { return std::cos(w * t) / (1.0 + c * t) + lim; }, 1.0),
                               lim)},
            {"E2", ICClass::e2([ex](double t) { return example_xi(ex, t); },
                               [ex](double t) { return example_xi_derivative(ex, t); }, 50.0, ex.upsilon)},
            {"E3", ICClass::e3([=](double t) { return bump(t, centre, width); }, eta, p)},
            {"E4", ICClass::e4([=](double t) { return amp * std::sin(w * t) / (1.0 + t); }, beta)},
        };
        for (const auto& [name, ic] : cases) {
            const auto v = bound_check(linear_response(ic, a, beta, grid), class_bound(ic, a, beta, horizon));
            worst = std::min(worst, v.margin);
            if (!v.holds) o.fail(name + " instance " + std::to_string(k) + " margin " + std::to_string(v.margin));
        }
        // Decay proxy: compactly supported g, longer horizon.
        const auto e4 = ICClass::e4(
            [=](double t) { return t < support ? amp * std::sin(std::numbers::pi * t / support) : 0.0; }, beta);
        const auto y = linear_response(e4, a, beta, long_grid);
        if (decay_check(y).holds) ++decayed;
        else o.fail("E4 decay proxy instance " + std::to_string(k));
        if (!bound_check(y, class_bound(e4, a, beta, 200.0)).holds) o.fail("E4 long bound " + std::to_string(k));
    }
    if (o.pass) o.detail << "40 bound instances, min margin " << worst << "; E4 decay proxy " << decayed << "/10";
}

void noise_routes(Outcome& o) {
    struct Instance {
        double alpha;
        std::function<double(double)> f, df;
        double hurst;  // 0: deterministic θ_s = s^{0.9}
    };
    const auto e = [](double s) { return std::exp(-s); };
    const auto de = [](double s) { return -std::exp(-s); };
    const auto one = [](double) { return 1.0; };
    const auto zero = [](double) { return 0.0; };
    const auto rat = [](double s) { return 1.0 / (1.0 + s); };
    const auto drat = [](double s) { return -1.0 / ((1.0 + s) * (1.0 + s)); };
    const auto cs = [](double s) { return std::cos(s); };
    const auto dcs = [](double s) { return -std::sin(s); };
    const std::vector<Instance> cases{{1.5, e, de, 0.9},     {1.5, one, zero, 0.9}, {1.3, rat, drat, 0.9},
                                      {1.6, cs, dcs, 0.85},  {1.4, e, de, 0.8},     {1.2, one, zero, 0.95},
                                      {1.5, cs, dcs, 0.0},   {1.65, rat, drat, 0.8}, {1.5, e, de, 0.75},
                                      {1.35, cs, dcs, 0.9}};
    const double beta = 0.7, a = -1.0, horizon = 2.0;
    const auto grid = uniform_grid(horizon, 4096);
    double worst_split = 0.0, worst_wn = 0.0;
    for (std::size_t k = 0; k < cases.size(); ++k) {
        const auto& in = cases[k];
        const auto theta = in.hurst > 0.0
                               ? fbm_sample({in.hurst, grid, 900 + k})
                               : SampledPath::from_function(grid, [](double s) { return std::pow(s, 0.9); }, 0.9);
        const auto s = noise_split(beta, a, in.alpha, in.f, in.df, theta, grid);
        double scale = 0.0, diff = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            scale = std::max(scale, std::abs(s.response[i]));
            diff = std::max(diff, std::abs(s.response[i] - s.i31[i] - s.i32[i]));
        }
        const double rs = diff / scale;
        const auto fp = SampledPath::from_function(grid, in.f, 1.0);
        const double w1 = weighted_noise(in.alpha, fp, theta, horizon);
        const double w2 = weighted_noise_direct(in.alpha, fp, theta, horizon);
        const double rw = std::abs(w1 - w2) / std::max(std::abs(w1), std::abs(w2));
        worst_split = std::max(worst_split, rs);
        worst_wn = std::max(worst_wn, rw);
        if (rs > 1e-3 || rw > 1e-3) {
            std::ostringstream os;
            os << "instance " << k << " split rel " << rs << " weighted_noise rel " << rw;
            o.fail(os.str());
        }
    }
    if (o.pass) o.detail << "worst split rel " << worst_split << ", worst weighted_noise rel " << worst_wn;
}

void monte_carlo(Outcome& o) {
    McConfig cfg;
    cfg.problem.beta = 0.7;
    cfg.problem.a_coef = -1.0;
    cfg.problem.nonlinearity = example_nonlinearity(0.5);
    cfg.problem.initial = initial::Constant{0.5};
    cfg.grid = uniform_grid(10.0, 400);
    cfg.problem.noise = NoiseSpec{1.7, SampledPath::from_function(cfg.grid, [](double s) { return std::exp(-s); }, 1.0),
                                  SampledPath::from_function(cfg.grid, [](double) { return 0.0; }, 0.79),
                                  [](double s) { return -std::exp(-s); }};
    cfg.hurst = 0.8;
    cfg.seed = 2024;
    cfg.xi_plus = initial::Constant{0.5};

    cfg.n_paths = 200;
    cfg.envelope = true;
    const auto r = mean_stability_mc(cfg);
    double worst = 1e300;
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
        const double m = (*r.envelope)[i] - r.mean_abs[i];
        if (m < worst) worst = m;
    }
    if (r.failed > 0) o.fail(std::to_string(r.failed) + " paths failed");
    if (worst < 0.0) o.fail("mean above envelope by " + std::to_string(-worst));

    cfg.envelope = false;
    std::vector<double> lx, ly;
    for (std::size_t n : {50, 100, 200, 400}) {
        cfg.n_paths = n;
        const auto rn = n == 200 ? r : mean_stability_mc(cfg);
        double se = 0.0;
        for (std::size_t i = 1; i < rn.std_error.size(); ++i) se += rn.std_error[i] / (rn.std_error.size() - 1);
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(se));
    }
    const double s = slope(lx, ly);
    if (std::abs(s + 0.5) > 0.15) o.fail("standard-error slope " + std::to_string(s));
    if (o.pass) o.detail << "200 paths, min envelope margin " << worst << ", SE slope " << s;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void reproducibility(Outcome& o) {
    const auto root = fs::temp_directory_path() / ("fracstab_accept_" + std::to_string(::getpid()));
    fs::remove_all(root);
    const std::vector<std::vector<std::string>> runs{
        {"fbm", "--H", "0.7", "--n", "1024", "--seed", "3"},
        {"solve", "--beta", "0.6", "--A", "-1", "--C", "0.5", "--x0", "0.3", "--alpha", "1.5", "--theta", "fbm:0.8",
         "--n", "500", "--T", "5", "--seed", "9"},
        {"mc-sweep", "--paths", "16", "--n", "100", "--format", "wide", "--envelope", "--seed", "4"},
        {"stability", "--n", "400"},
        {"compare", "--beta", "0.5", "--B", "-1", "--M", "0.5", "--n", "300"},
        {"young", "--theta", "fbm:0.7", "--n", "512", "--seed", "5"},
    };
    std::ostringstream sink;
    std::size_t files = 0;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto first = root / ("run" + std::to_string(k)), again = root / ("replay" + std::to_string(k));
        auto args = runs[k];
        args.insert(args.end(), {"--out", first.string()});
        if (cli::run(args, sink, sink) != 0) {
            o.fail(runs[k][0] + " exited non-zero");
            continue;
        }
        if (cli::run({"replay", (first / "manifest.json").string(), "--out", again.string()}, sink, sink) != 0) {
            o.fail(runs[k][0] + " replay exited non-zero");
            continue;
        }
        for (const auto& entry : fs::directory_iterator(first)) {
            if (entry.path().extension() != ".csv") continue;
            ++files;
            if (slurp(entry.path()) != slurp(again / entry.path().filename()))
                o.fail(runs[k][0] + ": " + entry.path().filename().string() + " differs");
        }
    }
    fs::remove_all(root);
    if (o.pass) o.detail << files << " CSV files byte-identical after replay";
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double limit_s;
        void (*run)(Outcome&);
    };
    const Criterion criteria[] = {
        {"Mittag-Leffler identities", 10, ml_identities},
        {"complete monotonicity", 5, complete_monotonicity},
        {"Young integral convergence and bound", 30, young},
        {"solver against closed form", 60, solver_vs_closed_form},
        {"positivity and envelope", 30, positivity_envelope},
        {"comparison engine", 60, comparison},
        {"E-class bounds", 60, class_bounds},
        {"noise routes", 60, noise_routes},
        {"mean-stability Monte Carlo", 600, monte_carlo},
        {"CLI reproducibility", 5, reproducibility},
    };
    int failed = 0, index = 0;
    for (const auto& c : criteria) {
        ++index;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.limit_s) o.fail("over the time limit");
        if (!o.pass) ++failed;
        std::printf("%s %2d %s (%.2f s / %.0f s): %s\n", o.pass ? "PASS" : "FAIL", index, c.name, secs, c.limit_s,
                    o.detail.str().c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
