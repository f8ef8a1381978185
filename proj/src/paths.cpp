#include "fracstab/paths.hpp"

#include "fracstab/errors.hpp"
#include "fracstab/io.hpp"
#include "fracstab/mittag_leffler.hpp"
#include "fracstab/product_integration.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace fracstab {

SampledPath::SampledPath(std::vector<double> times, std::vector<double> values, double exponent)
    : times_(std::move(times)), values_(std::move(values)), exponent_(exponent) {
    const std::string op = "SampledPath";
    detail::require(times_.size() == values_.size(), op, "times and values must have equal length");
    detail::require(times_.size() >= 2, op, "needs at least two points");
    detail::require(exponent_ > 0.0 && exponent_ <= 1.0, op, "exponent must lie in (0, 1]");
    detail::require(times_.front() >= 0.0, op, "times must be nonnegative");
    for (std::size_t i = 0; i + 1 < times_.size(); ++i)
        detail::require(times_[i] < times_[i + 1], op, "times must be strictly increasing");
    for (double v : values_) detail::require(std::isfinite(v), op, "values must be finite");
}

SampledPath SampledPath::from_function(std::vector<double> times, const std::function<double(double)>& fn,
                                       double exponent) {
    std::vector<double> values(times.size());
    std::transform(times.begin(), times.end(), values.begin(), fn);
    return SampledPath(std::move(times), std::move(values), exponent);
}

double SampledPath::at(double t) const {
    detail::require(t >= times_.front() && t <= times_.back(), "SampledPath::at", "time outside the grid");
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    if (it == times_.end()) return values_.back();
    const std::size_t j = static_cast<std::size_t>(it - times_.begin());
    const std::size_t i = j - 1;
    if (t == times_[i]) return values_[i];
    const double w = (t - times_[i]) / (times_[j] - times_[i]);
    return values_[i] + w * (values_[j] - values_[i]);
}

SampledPath SampledPath::scaled(double factor) const {
    std::vector<double> v(values_);
    for (double& x : v) x *= factor;
    return SampledPath(times_, std::move(v), exponent_);
}

std::vector<double> uniform_grid(double horizon, std::size_t steps) {
    detail::require(horizon > 0.0 && steps >= 1, "uniform_grid", "requires horizon > 0 and steps >= 1");
    std::vector<double> t(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) t[i] = horizon * static_cast<double>(i) / static_cast<double>(steps);
    return t;
}

bool is_uniform(std::span<const double> times) {
    if (times.size() < 2) return false;
    const double h = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    for (std::size_t i = 0; i + 1 < times.size(); ++i)
        if (std::abs((times[i + 1] - times[i]) - h) > 1e-9 * h) return false;
    return true;
}

namespace {

double seminorm(std::span<const double> t, std::span<const double> v, double gamma, bool dyadic) {
    const std::size_t n = t.size();
    double best = 0.0;
    if (dyadic && n > 4096) {
        for (std::size_t lag = 1; lag < n; lag *= 2)
            for (std::size_t i = 0; i + lag < n; ++i)
                best = std::max(best, std::abs(v[i + lag] - v[i]) / std::pow(t[i + lag] - t[i], gamma));
        return best;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            best = std::max(best, std::abs(v[j] - v[i]) / std::pow(t[j] - t[i], gamma));
    return best;
}

struct Resampled {
    std::vector<double> t, f, g;
};

void check_interval(const SampledPath& f, const SampledPath& g, double s, double t, const std::string& op) {
    detail::require(s <= t, op, "requires s <= t");
    detail::require(s >= std::max(f.front_time(), g.front_time()) && t <= std::min(f.back_time(), g.back_time()), op,
                    "range error: [s, t] not covered by both grids");
}

// Union of both grids inside [s, t], with s and t included.
Resampled union_grid(const SampledPath& f, const SampledPath& g, double s, double t) {
    Resampled r;
    r.t.reserve(f.size() + g.size() + 2);
    r.t.push_back(s);
    for (double x : f.times())
        if (x > s && x < t) r.t.push_back(x);
    for (double x : g.times())
        if (x > s && x < t) r.t.push_back(x);
    if (t > s) r.t.push_back(t);
    std::sort(r.t.begin(), r.t.end());
    r.t.erase(std::unique(r.t.begin(), r.t.end()), r.t.end());
    r.f.resize(r.t.size());
    r.g.resize(r.t.size());
    // Both grids are sorted: walk them instead of bisecting per point.
    auto walk = [&](const SampledPath& p, std::vector<double>& out) {
        const auto& pt = p.times();
        const auto& pv = p.values();
        std::size_t j = 0;
        for (std::size_t i = 0; i < r.t.size(); ++i) {
            const double x = r.t[i];
            while (j + 1 < pt.size() && pt[j + 1] <= x) ++j;
            if (pt[j] == x || j + 1 == pt.size()) {
                out[i] = pv[j];
            } else {
                const double w = (x - pt[j]) / (pt[j + 1] - pt[j]);
                out[i] = pv[j] + w * (pv[j + 1] - pv[j]);
            }
        }
    };
    walk(f, r.f);
    walk(g, r.g);
    return r;
}

void check_exponents(const SampledPath& f, const SampledPath& g, const std::string& op) {
    detail::require(f.exponent() + g.exponent() > 1.0, op, "exponent error: requires kappa + gamma > 1");
}

}  // namespace

double holder_seminorm(const SampledPath& p, double gamma, bool dyadic_approx) {
    detail::require(gamma > 0.0 && gamma <= 1.0, "holder_seminorm", "gamma must lie in (0, 1]");
    return seminorm(p.times(), p.values(), gamma, dyadic_approx);
}

double sup_norm(const SampledPath& p, double s, double t) {
    double best = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p.times()[i] >= s && p.times()[i] <= t) best = std::max(best, std::abs(p.values()[i]));
    return best;
}

double young_integral(const SampledPath& f, const SampledPath& g, double s, double t) {
    const std::string op = "young_integral";
    check_exponents(f, g, op);
    check_interval(f, g, s, t, op);
    if (s == t) return 0.0;
    const Resampled r = union_grid(f, g, s, t);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < r.t.size(); ++i) sum += r.f[i] * (r.g[i + 1] - r.g[i]);
    return sum;
}

double young_bound(const SampledPath& f, const SampledPath& g, double s, double t) {
    const std::string op = "young_bound";
    check_exponents(f, g, op);
    check_interval(f, g, s, t, op);
    if (s == t) return 0.0;
    const Resampled r = union_grid(f, g, s, t);
    const double gamma = g.exponent();
    const double kappa = f.exponent();
    double f_sup = 0.0;
    for (double v : r.f) f_sup = std::max(f_sup, std::abs(v));
    const double g_hol = seminorm(r.t, r.g, gamma, false);
    const double f_hol = seminorm(r.t, r.f, kappa, false);
    const double c = 1.0 / (std::pow(2.0, gamma + kappa) - 2.0);
    const double len = t - s;
    return f_sup * g_hol * std::pow(len, gamma) + c * f_hol * g_hol * std::pow(len, gamma + kappa);
}

SampledPath cumulative_young(const SampledPath& f, const SampledPath& theta) {
    const std::string op = "cumulative_young";
    check_exponents(f, theta, op);
    const double s = std::max(f.front_time(), theta.front_time());
    const double t = std::min(f.back_time(), theta.back_time());
    detail::require(s < t, op, "grids do not overlap");
    const Resampled r = union_grid(f, theta, s, t);
    std::vector<double> acc(r.t.size(), 0.0);
    for (std::size_t i = 0; i + 1 < r.t.size(); ++i) acc[i + 1] = acc[i] + r.f[i] * (r.g[i + 1] - r.g[i]);
    return SampledPath(r.t, std::move(acc), theta.exponent());
}

namespace {

void check_noise(double alpha, const SampledPath& f, const SampledPath& theta, const std::string& op) {
    detail::require(alpha > 1.0 && alpha < 2.0, op, "requires alpha in (1, 2)");
    detail::require(alpha + theta.exponent() > 2.0, op, "exponent error: requires alpha + gamma > 2");
    check_exponents(f, theta, op);
    detail::require(theta.front_time() == 0.0 && f.front_time() == 0.0, op, "paths must start at t = 0");
    detail::require(theta.values().front() == 0.0, op, "requires theta_0 = 0");
}

quad::KernelAntiderivatives noise_kernel(double alpha) {
    // (α−1)/Γ(α) u^{α−2}
    return quad::power_kernel(alpha - 1.0, (alpha - 1.0) * rgamma(alpha));
}

// θ̃ restricted to [0, t], with t appended as a node.
std::pair<std::vector<double>, std::vector<double>> running_integral_upto(const SampledPath& f,
                                                                          const SampledPath& theta, double t) {
    const SampledPath tilde = cumulative_young(f, theta);
    std::vector<double> nodes, values;
    for (std::size_t i = 0; i < tilde.size() && tilde.times()[i] <= t; ++i) {
        nodes.push_back(tilde.times()[i]);
        values.push_back(tilde.values()[i]);
    }
    if (nodes.back() < t) {
        nodes.push_back(t);
        values.push_back(tilde.at(t));
    }
    return {std::move(nodes), std::move(values)};
}

}  // namespace

double weighted_noise(double alpha, const SampledPath& f, const SampledPath& theta, double t) {
    const std::string op = "weighted_noise";
    check_noise(alpha, f, theta, op);
    detail::require(t >= 0.0 && t <= std::min(f.back_time(), theta.back_time()), op, "t outside the grids");
    if (t == 0.0) return 0.0;
    const auto [nodes, values] = running_integral_upto(f, theta, t);
    return quad::integrate(nodes, values, t, noise_kernel(alpha));
}

SampledPath weighted_noise_curve(double alpha, const SampledPath& f, const SampledPath& theta) {
    const std::string op = "weighted_noise_curve";
    check_noise(alpha, f, theta, op);
    const SampledPath tilde = cumulative_young(f, theta);
    const auto& nodes = tilde.times();
    const auto& values = tilde.values();
    std::vector<double> z(nodes.size(), 0.0);
    const auto kernel = noise_kernel(alpha);
    if (is_uniform(nodes)) {
        const std::size_t steps = nodes.size() - 1;
        const quad::LagWeights w(nodes.back() / static_cast<double>(steps), steps, kernel);
        for (std::size_t n = 1; n <= steps; ++n) z[n] = w.convolve(values, n);
    } else {
        for (std::size_t n = 1; n < nodes.size(); ++n)
            z[n] = quad::integrate(std::span(nodes).first(n + 1), std::span(values).first(n + 1), nodes[n], kernel);
    }
    // Z is (α−1+γ)∧1 regular; report the weaker claim carried by θ.
    return SampledPath(nodes, std::move(z), theta.exponent());
}

double weighted_noise_direct(double alpha, const SampledPath& f, const SampledPath& theta, double t) {
    const std::string op = "weighted_noise_direct";
    check_noise(alpha, f, theta, op);
    detail::require(t >= 0.0 && t <= std::min(f.back_time(), theta.back_time()), op, "t outside the grids");
    if (t == 0.0) return 0.0;
    const Resampled r = union_grid(f, theta, 0.0, t);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < r.t.size(); ++i)
        sum += std::pow(t - r.t[i], alpha - 1.0) * r.f[i] * (r.g[i + 1] - r.g[i]);
    return sum * rgamma(alpha);
}

void write_path_csv(std::ostream& os, const SampledPath& p) {
    os << "# exponent=" << io::format_double(p.exponent()) << '\n';
    os << "t,value\n";
    for (std::size_t i = 0; i < p.size(); ++i)
        os << io::format_double(p.times()[i]) << ',' << io::format_double(p.values()[i]) << '\n';
}

SampledPath read_path_csv(std::istream& is) {
    const std::string op = "read_path_csv";
    std::string line;
    double exponent = -1.0;
    bool header = false;
    std::vector<double> t, v;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto pos = line.find("exponent=");
            if (pos != std::string::npos) exponent = std::stod(line.substr(pos + 9));
            continue;
        }
        if (!header) {
            detail::require(line == "t,value", op, "expected header 't,value'");
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        detail::require(comma != std::string::npos, op, "malformed row: " + line);
        t.push_back(std::stod(line.substr(0, comma)));
        v.push_back(std::stod(line.substr(comma + 1)));
    }
    detail::require(header, op, "missing header");
    detail::require(exponent > 0.0, op, "missing '# exponent=' metadata line");
    return SampledPath(std::move(t), std::move(v), exponent);
}

}  // namespace fracstab
