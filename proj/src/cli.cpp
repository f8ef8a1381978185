#include "fracstab/cli.hpp"

#include "fracstab/comparison.hpp"
#include "fracstab/errors.hpp"
#include "fracstab/fbm.hpp"
#include "fracstab/io.hpp"
#include "fracstab/mittag_leffler.hpp"
#include "fracstab/paths.hpp"
#include "fracstab/solver.hpp"
#include "fracstab/stability_lab.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

namespace fracstab::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Where a command's artifacts go: files under --out, or `out` when absent.
class Sink {
public:
    Sink(std::string dir, std::ostream& out) : dir_(std::move(dir)), out_(out) {
        if (!dir_.empty()) fs::create_directories(dir_);
    }

    void emit(const std::string& name, const std::string& content) {
        if (dir_.empty()) {
            out_ << content;
            return;
        }
        write(name, content);
        files_.push_back({{"file", name}, {"bytes", content.size()}});
    }

    // Human-readable notes: always to `out`.
    std::ostream& note() { return out_; }

    bool to_disk() const { return !dir_.empty(); }
    const std::string& dir() const { return dir_; }
    const json& files() const { return files_; }

    void write(const std::string& name, const std::string& content) const {
        std::ofstream f(fs::path(dir_) / name, std::ios::binary);
        f << content;
        if (!f) throw std::runtime_error("cannot write " + (fs::path(dir_) / name).string());
    }

private:
    std::string dir_;
    std::ostream& out_;
    json files_ = json::array();
};

struct Common {
    std::string out;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--out", c.out, "output directory for CSVs and manifest.json");
    sub->add_option("--seed", c.seed, "random seed (falls back to FRACSTAB_SEED, then 0)");
}

std::uint64_t resolve_seed(const Common& c) {
    if (c.seed) return *c.seed;
    if (const char* env = std::getenv("FRACSTAB_SEED")) {
        try {
            std::size_t pos = 0;
            const auto v = std::stoull(env, &pos);
            if (pos == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw DomainError("FRACSTAB_SEED must be a non-negative integer, got '" + std::string(env) + "'");
    }
    return 0;
}

std::vector<double> make_grid(double horizon, std::size_t n) {
    detail::require(horizon > 0.0 && std::isfinite(horizon), "grid", "--T must be > 0");
    detail::require(n >= 1, "grid", "--n must be >= 1");
    return uniform_grid(horizon, n);
}

// ---------------------------------------------------------------------------
// Path specifications: const:v, power:p, exp:c, fbm:H, csv:FILE.

struct PathSpec {
    SampledPath path;
    RealFn derivative;  // empty when unknown
};

PathSpec parse_path(const std::string& spec, const std::vector<double>& grid, std::uint64_t seed,
                    std::uint64_t stream) {
    const std::string op = "path spec '" + spec + "'";
    const auto colon = spec.find(':');
    detail::require(colon != std::string::npos, op, "expected kind:value (const, power, exp, fbm, csv)");
    const std::string kind = spec.substr(0, colon), arg = spec.substr(colon + 1);
    if (kind == "csv") {
        std::ifstream f(arg);
        detail::require(static_cast<bool>(f), op, "cannot open file");
        return {read_path_csv(f), {}};
    }
    double v = 0.0;
    try {
        std::size_t pos = 0;
        v = std::stod(arg, &pos);
        detail::require(pos == arg.size(), op, "trailing characters after the number");
    } catch (const std::logic_error&) {
        detail::domain_fail(op, "value is not a number");
    }
    if (kind == "const")
        return {SampledPath::from_function(grid, [v](double) { return v; }, 1.0), [](double) { return 0.0; }};
    if (kind == "power") {
        detail::require(v > 0.0, op, "power exponent must be > 0");
        return {SampledPath::from_function(grid, [v](double s) { return std::pow(s, v); }, std::min(v, 1.0)),
                [v](double s) { return s > 0.0 ? v * std::pow(s, v - 1.0) : 0.0; }};
    }
    if (kind == "exp") {
        detail::require(v >= 0.0, op, "decay rate must be >= 0");
        return {SampledPath::from_function(grid, [v](double s) { return std::exp(-v * s); }, 1.0),
                [v](double s) { return -v * std::exp(-v * s); }};
    }
    if (kind == "fbm") return {fbm_sample({v, grid, derive_seed(seed, stream)}), {}};
    detail::domain_fail(op, "unknown kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Commands

struct MlEval {
    double a = 0.5, b = 1.0, z = 0.0, tol = ml::kDefaultTol;
};

void run_ml_eval(const MlEval& o, Sink& sink) {
    const auto e = ml::eval_traced({o.a, o.b, o.z, o.tol});
    static const char* names[] = {"zero", "series", "asymptotic", "contour", "exponential"};
    const std::string route = names[static_cast<int>(e.route)];
    if (sink.to_disk())
        sink.emit("ml_eval.csv", "a,b,z,tol,value,route\n" + io::format_double(o.a) + "," + io::format_double(o.b) + "," +
                                 io::format_double(o.z) + "," + io::format_double(o.tol) + "," +
                                     io::format_double(e.value) + "," + route + "\n");
    sink.note() << io::format_double(e.value) << '\n';
}

struct Young {
    std::string f = "power:1", theta = "power:2";
    double horizon = 1.0;
    std::size_t n = 1024;
};

void run_young(const Young& o, std::uint64_t seed, Sink& sink) {
    const auto grid = make_grid(o.horizon, o.n);
    const auto f = parse_path(o.f, grid, seed, 0);
    const auto theta = parse_path(o.theta, grid, seed, 1);
    const double t1 = std::min(f.path.back_time(), theta.path.back_time());
    const double value = young_integral(f.path, theta.path, 0.0, t1);
    const double bound = young_bound(f.path, theta.path, 0.0, t1);
    std::ostringstream os;
    os << "# f=" << o.f << " theta=" << o.theta << " integral=" << io::format_double(value)
       << " bound=" << io::format_double(bound) << '\n';
    write_path_csv(os, cumulative_young(f.path, theta.path));
    sink.emit("young.csv", os.str());
    if (sink.to_disk()) sink.note() << "integral " << io::format_double(value) << " bound " << io::format_double(bound) << '\n';
}

struct Fbm {
    double hurst = 0.5, horizon = 1.0;
    std::size_t n = 512;
};

void run_fbm(const Fbm& o, std::uint64_t seed, Sink& sink) {
    const auto path = fbm_sample({o.hurst, make_grid(o.horizon, o.n), seed});
    std::ostringstream os;
    write_path_csv(os, path);
    sink.emit("fbm.csv", os.str());
    if (sink.to_disk() && path.size() >= 256)
        sink.note() << "holder estimate " << io::format_double(holder_estimate(path)) << '\n';
}

struct Solve {
    double beta = 0.5, a = -1.0, x0 = 1.0, c = 0.0, horizon = 1.0, alpha = 0.0;
    std::size_t n = 1000;
    std::string scheme = "semilinear", xi = "const", f = "exp:1", theta = "fbm:0.8";
    double upsilon = 0.25, c0 = 1.0, c1 = 1.0;
};

FracIVP build_problem(const Solve& o, const std::vector<double>& grid, std::uint64_t seed) {
    FracIVP p;
    p.beta = o.beta;
    p.a_coef = o.a;
    if (o.c < 0.0) detail::domain_fail("solve", "--C must be >= 0");
    if (o.c > 0.0) p.nonlinearity = lab::example_nonlinearity(o.c);
    if (o.xi == "const") {
        p.initial = initial::Constant{o.x0};
    } else if (o.xi == "example") {
        const lab::XiExample e{o.upsilon, o.c0, o.c1};
        p.initial = initial::ClosedForm{[e](double t) { return lab::example_xi(e, t); }, "example-e2"};
    } else {
        detail::domain_fail("solve", "--xi must be const or example");
    }
    if (o.alpha != 0.0) {
        const auto f = parse_path(o.f, grid, seed, 0);
        const auto theta = parse_path(o.theta, grid, seed, 1);
        p.noise = NoiseSpec{o.alpha, f.path, theta.path, f.derivative};
    }
    return p;
}

void run_solve(const Solve& o, std::uint64_t seed, Sink& sink) {
    const auto grid = make_grid(o.horizon, o.n);
    const auto p = build_problem(o, grid, seed);
    Trajectory x;
    if (o.scheme == "semilinear")
        x = solve_semilinear(p, grid);
    else if (o.scheme == "closed-form")
        x = solve_linear_closed_form(p, grid);
    else
        detail::domain_fail("solve", "--scheme must be semilinear or closed-form");
    std::ostringstream os;
    write_trajectory_csv(os, x);
    sink.emit("trajectory.csv", os.str());
    if (sink.to_disk())
        sink.note() << "X(T) " << io::format_double(x.values.back()) << " defect " << io::format_double(x.defect) << '\n';
}

struct Compare {
    double beta = 0.5, b = -1.0, m = 0.5, horizon = 1.0, tol = 1e-10;
    std::size_t n = 1000;
    std::string y = "const:1";
};

void run_compare(const Compare& o, std::uint64_t seed, Sink& sink) {
    const auto grid = make_grid(o.horizon, o.n);
    ComparisonKernel k;
    const double m = o.m;
    k.k = [m](double, double x) { return m * x; };
    k.lipschitz = m;
    k.label = "linear(" + io::format_double(m) + ")";
    const ComparisonProblem cp{parse_path(o.y, grid, seed, 0).path, o.b, o.beta, k, o.horizon};
    PicardOptions opts;
    opts.tol = o.tol;
    const auto res = majorant_solve(cp, grid, opts);
    const auto& d = res.diagnostics;
    auto u = res.u;
    u.meta.emplace_back("contraction", io::format_double(d.contraction));
    u.meta.emplace_back("residual", io::format_double(d.residual));
    std::ostringstream os;
    write_trajectory_csv(os, u);
    sink.emit("majorant.csv", os.str());
    if (sink.to_disk())
        sink.note() << "windows " << d.window_lengths.size() << " contraction " << io::format_double(d.contraction)
                    << " residual " << io::format_double(d.residual) << '\n';
}

struct Stability {
    double beta = 0.7, a = -1.0, c = 0.5, x0 = 0.1, horizon = 20.0;
    std::size_t n = 2000;
};

void run_stability(const Stability& o, Sink& sink) {
    const auto grid = make_grid(o.horizon, o.n);
    detail::require(o.c > 0.0, "stability", "--C must be > 0");
    FracIVP p;
    p.beta = o.beta;
    p.a_coef = o.a;
    p.nonlinearity = lab::example_nonlinearity(o.c);
    p.initial = initial::Constant{o.x0};
    const auto x = solve_semilinear(p, grid);
    FracIVP lin = p;
    lin.nonlinearity = {};
    const auto y = solve_linear_closed_form(lin, grid);

    lab::StabilityReport r;
    r.parameters = {{"beta", io::format_double(o.beta)}, {"A", io::format_double(o.a)},
                    {"C", io::format_double(o.c)},       {"x0", io::format_double(o.x0)},
                    {"T", io::format_double(o.horizon)}, {"n", std::to_string(o.n)},
                    {"h", p.nonlinearity.label}};
    r.verdicts.push_back(lab::positivity_check(x));
    r.verdicts.push_back(lab::ml_envelope_check(x, 2.0 * std::abs(o.x0), 1.0, o.a + o.c, o.beta));
    r.verdicts.push_back(lab::decay_check(x));
    r.verdicts.push_back(lab::reduction_check(p, x, y).verdict);

    std::ostringstream traj, rep;
    write_trajectory_csv(traj, x);
    lab::write_report(rep, r);
    if (sink.to_disk()) {
        sink.emit("trajectory.csv", traj.str());
        sink.emit("report.txt", rep.str());
    }
    sink.note() << rep.str();
}

struct McSweep {
    double beta = 0.7, a = -1.0, c = 0.5, x0 = 0.5, hurst = 0.8, horizon = 10.0, alpha = 0.0;
    std::size_t n = 400, paths = 200;
    unsigned jobs = 0;
    std::string f = "exp:1", format = "long";
    bool envelope = false;
};

void run_mc_sweep(const McSweep& o, std::uint64_t seed, Sink& sink) {
    const auto grid = make_grid(o.horizon, o.n);
    detail::require(o.format == "long" || o.format == "wide", "mc-sweep", "--format must be long or wide");
    detail::require(o.c >= 0.0, "mc-sweep", "--C must be >= 0");
    lab::McConfig cfg;
    cfg.problem.beta = o.beta;
    cfg.problem.a_coef = o.a;
    if (o.c > 0.0) cfg.problem.nonlinearity = lab::example_nonlinearity(o.c);
    cfg.problem.initial = initial::Constant{o.x0};
    const auto f = parse_path(o.f, grid, seed, 0);
    const double alpha = o.alpha == 0.0 ? o.beta + 1.0 : o.alpha;
    // θ is drawn per path; the placeholder only has to pass validation.
    const double claim = std::max(o.hurst - 0.01, 0.5 * o.hurst);
    cfg.problem.noise = NoiseSpec{alpha, f.path, SampledPath::from_function(grid, [](double) { return 0.0; }, claim),
                                  f.derivative};
    cfg.hurst = o.hurst;
    cfg.n_paths = o.paths;
    cfg.seed = seed;
    cfg.grid = grid;
    cfg.jobs = o.jobs;
    cfg.keep_paths = o.format == "wide";
    cfg.envelope = o.envelope;
    if (o.x0 >= 0.0)
        cfg.xi_plus = initial::Constant{o.x0};
    else
        cfg.xi_minus = initial::Constant{-o.x0};
    const auto r = lab::mean_stability_mc(cfg);

    std::ostringstream os;
    os << "# beta=" << io::format_double(o.beta) << " A=" << io::format_double(o.a) << " C=" << io::format_double(o.c)
       << " H=" << io::format_double(o.hurst) << " alpha=" << io::format_double(alpha) << " paths=" << o.paths
       << " used=" << r.used << " failed=" << r.failed << " seed=" << seed << '\n';
    os << "t,mean_abs,std_error" << (r.envelope ? ",envelope" : "") << '\n';
    for (std::size_t i = 0; i < grid.size(); ++i) {
        os << io::format_double(grid[i]) << ',' << io::format_double(r.mean_abs[i]) << ','
           << io::format_double(r.std_error[i]);
        if (r.envelope) os << ',' << io::format_double((*r.envelope)[i]);
        os << '\n';
    }
    sink.emit("mean.csv", os.str());
    if (o.format == "wide") {
        std::ostringstream w;
        w << "t";
        for (std::size_t j = 0; j < r.paths.size(); ++j) w << ",path" << j;
        w << '\n';
        for (std::size_t i = 0; i < grid.size(); ++i) {
            w << io::format_double(grid[i]);
            for (const auto& path : r.paths) w << ',' << io::format_double(path[i]);
            w << '\n';
        }
        sink.emit("paths.csv", w.str());
    }
    for (const auto& msg : r.failures) sink.note() << "skipped " << msg << '\n';
    if (sink.to_disk()) sink.note() << "paths used " << r.used << " failed " << r.failed << '\n';
}

// ---------------------------------------------------------------------------

// Every option of `sub` with its effective value, for the manifest.
json collect_params(const CLI::App* sub, std::uint64_t seed) {
    json params = json::object();
    for (const CLI::Option* opt : sub->get_options()) {
        const std::string name = opt->get_single_name();
        if (name == "help" || name == "out" || name == "seed") continue;
        if (opt->get_expected_min() == 0) {
            params[name] = opt->count() > 0;
            continue;
        }
        params[name] = opt->count() > 0 ? opt->as<std::string>() : opt->get_default_str();
    }
    params["seed"] = std::to_string(seed);
    return params;
}

std::vector<std::string> replay_args(const json& manifest, const std::string& out) {
    if (!manifest.contains("command") || !manifest.contains("params") || !manifest["params"].is_object())
        throw CLI::ValidationError("replay", "manifest lacks command or params");
    std::vector<std::string> args{manifest["command"].get<std::string>()};
    for (const auto& [k, v] : manifest["params"].items()) {
        if (v.is_boolean()) {
            if (v.get<bool>()) args.push_back("--" + k);
            continue;
        }
        const auto s = v.get<std::string>();
        if (s.empty()) continue;
        args.push_back("--" + k);
        args.push_back(s);
    }
    if (!out.empty()) {
        args.push_back("--out");
        args.push_back(out);
    }
    return args;
}

int run_impl(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth) {
    CLI::App app{"Fractional Volterra stability experiments", "fracstab"};
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "INI file with one [section] per command; flags win");
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Common common;
    MlEval ml;
    auto* s_ml = app.add_subcommand("ml-eval", "evaluate E_{a,b}(z)");
    s_ml->add_option("--a", ml.a, "first parameter, > 0")->required();
    s_ml->add_option("--b", ml.b, "second parameter, > 0");
    s_ml->add_option("--z", ml.z, "argument in [-200, 30]")->required();
    s_ml->add_option("--tol", ml.tol, "accuracy target");

    Young yo;
    auto* s_young = app.add_subcommand("young", "Young integral of f against theta on [0, T]");
    s_young->add_option("--f", yo.f, "integrand path spec");
    s_young->add_option("--theta", yo.theta, "integrator path spec");
    s_young->add_option("--T", yo.horizon, "horizon");
    s_young->add_option("--n", yo.n, "grid steps");

    Fbm fb;
    auto* s_fbm = app.add_subcommand("fbm", "sample fractional Brownian motion");
    s_fbm->add_option("--H", fb.hurst, "Hurst parameter in (0, 1)")->required();
    s_fbm->add_option("--n", fb.n, "grid steps");
    s_fbm->add_option("--T", fb.horizon, "horizon");

    Solve so;
    auto* s_solve = app.add_subcommand("solve", "solve X = xi + I^beta[AX + h(X)] + Z");
    s_solve->add_option("--beta", so.beta, "fractional order in (0, 1)");
    s_solve->add_option("--A", so.a, "linear coefficient");
    s_solve->add_option("--x0", so.x0, "constant initial value");
    s_solve->add_option("--C", so.c, "saturating nonlinearity 1 - exp(-Cx); 0 for none");
    s_solve->add_option("--n", so.n, "grid steps");
    s_solve->add_option("--T", so.horizon, "horizon");
    s_solve->add_option("--scheme", so.scheme, "semilinear or closed-form");
    s_solve->add_option("--xi", so.xi, "const or example (g(t) sin(1/t))");
    s_solve->add_option("--upsilon", so.upsilon, "example xi exponent");
    s_solve->add_option("--c0", so.c0, "example xi constant near 0");
    s_solve->add_option("--c1", so.c1, "example xi constant at infinity");
    s_solve->add_option("--alpha", so.alpha, "noise order in (1, 2); 0 for no noise");
    s_solve->add_option("--f", so.f, "noise integrand path spec");
    s_solve->add_option("--theta", so.theta, "noise driver path spec");

    Compare co;
    auto* s_cmp = app.add_subcommand("compare", "majorant u = y + K_B * (M u)");
    s_cmp->add_option("--beta", co.beta, "fractional order in (0, 1)");
    s_cmp->add_option("--B", co.b, "kernel coefficient");
    s_cmp->add_option("--M", co.m, "Lipschitz constant of k(s, x) = M x");
    s_cmp->add_option("--y", co.y, "inhomogeneity path spec");
    s_cmp->add_option("--n", co.n, "grid steps");
    s_cmp->add_option("--T", co.horizon, "horizon");
    s_cmp->add_option("--tol", co.tol, "Picard tolerance");

    Stability st;
    auto* s_st = app.add_subcommand("stability", "positivity, envelope, decay and reduction verdicts");
    s_st->add_option("--beta", st.beta, "fractional order in (0, 1)");
    s_st->add_option("--A", st.a, "linear coefficient, A + C < 0");
    s_st->add_option("--C", st.c, "saturating nonlinearity constant");
    s_st->add_option("--x0", st.x0, "constant initial value");
    s_st->add_option("--n", st.n, "grid steps");
    s_st->add_option("--T", st.horizon, "horizon");

    McSweep mc;
    auto* s_mc = app.add_subcommand("mc-sweep", "Monte Carlo mean |X| over fBm drivers");
    s_mc->add_option("--beta", mc.beta, "fractional order in (0, 1)");
    s_mc->add_option("--A", mc.a, "linear coefficient");
    s_mc->add_option("--C", mc.c, "saturating nonlinearity constant; 0 for none");
    s_mc->add_option("--x0", mc.x0, "constant initial value");
    s_mc->add_option("--H", mc.hurst, "Hurst parameter");
    s_mc->add_option("--alpha", mc.alpha, "noise order; 0 for beta + 1");
    s_mc->add_option("--f", mc.f, "noise integrand path spec");
    s_mc->add_option("--paths", mc.paths, "number of paths");
    s_mc->add_option("--n", mc.n, "grid steps");
    s_mc->add_option("--T", mc.horizon, "horizon");
    s_mc->add_option("--jobs", mc.jobs, "worker threads; 0 for all cores");
    s_mc->add_option("--format", mc.format, "long or wide (adds one column per path)");
    s_mc->add_flag("--envelope", mc.envelope, "also solve the deterministic envelope");

    for (auto* sub : {s_ml, s_young, s_fbm, s_solve, s_cmp, s_st, s_mc}) add_common(sub, common);

    std::string manifest_path, replay_out;
    auto* s_replay = app.add_subcommand("replay", "rerun the command recorded in a manifest");
    s_replay->add_option("manifest", manifest_path, "manifest.json")->required()->check(CLI::ExistingFile);
    s_replay->add_option("--out", replay_out, "output directory");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion& e) {
        out << kVersion << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "fracstab: " << e.what() << '\n';
        return kExitParse;
    }

    if (s_replay->parsed()) {
        if (depth > 0) {
            err << "fracstab: a manifest cannot replay another manifest\n";
            return kExitParse;
        }
        json manifest;
        try {
            std::ifstream f(manifest_path);
            manifest = json::parse(f);
            return run_impl(replay_args(manifest, replay_out), out, err, depth + 1);
        } catch (const std::exception& e) {
            err << "fracstab: cannot replay " << manifest_path << ": " << e.what() << '\n';
            return kExitParse;
        }
    }

    CLI::App* sub = app.get_subcommands().front();
    const auto start = std::chrono::steady_clock::now();
    try {
        const std::uint64_t seed = resolve_seed(common);
        Sink sink(common.out, out);
        if (sub == s_ml) run_ml_eval(ml, sink);
        else if (sub == s_young) run_young(yo, seed, sink);
        else if (sub == s_fbm) run_fbm(fb, seed, sink);
        else if (sub == s_solve) run_solve(so, seed, sink);
        else if (sub == s_cmp) run_compare(co, seed, sink);
        else if (sub == s_st) run_stability(st, sink);
        else if (sub == s_mc) run_mc_sweep(mc, seed, sink);

        if (sink.to_disk()) {
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            const json manifest{{"tool", "fracstab"},
                                {"version", kVersion},
                                {"command", sub->get_name()},
                                {"seed", seed},
                                {"params", collect_params(sub, seed)},
                                {"outputs", sink.files()},
                                {"wall_time_s", wall}};
            sink.write("manifest.json", manifest.dump(2) + "\n");
        }
    } catch (const DomainError& e) {
        err << "fracstab: invalid input: " << e.what() << '\n';
        return kExitValidation;
    } catch (const NumericError& e) {
        err << "fracstab: numerical failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        err << "fracstab: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    return run_impl(args, out, err, 0);
}

}  // namespace fracstab::cli
