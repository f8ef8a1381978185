#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fracstab {

/// A real function of time sampled on a strictly increasing grid, together
/// with the Hölder exponent it is claimed to have.
class SampledPath {
public:
    SampledPath(std::vector<double> times, std::vector<double> values, double exponent);

    /// Samples `fn` on `times`.
    static SampledPath from_function(std::vector<double> times, const std::function<double(double)>& fn,
                                     double exponent);

    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& values() const { return values_; }
    double exponent() const { return exponent_; }
    std::size_t size() const { return times_.size(); }
    double front_time() const { return times_.front(); }
    double back_time() const { return times_.back(); }

    /// Linear interpolation; t must lie inside [front_time, back_time].
    double at(double t) const;

    /// The same path with every value multiplied by `factor`.
    SampledPath scaled(double factor) const;

private:
    std::vector<double> times_;
    std::vector<double> values_;
    double exponent_;
};

/// n+1 equally spaced points on [0, horizon].
std::vector<double> uniform_grid(double horizon, std::size_t steps);

/// True when consecutive spacings agree to 1e-9 relative.
bool is_uniform(std::span<const double> times);

/// Grid Hölder seminorm max_{r≠t} |g_t − g_r| / |t − r|^γ. Exact O(n²) over
/// all grid pairs; with `dyadic_approx` and more than 4096 points only pairs
/// at dyadic index lags are visited (still a lower bound of the exact value).
double holder_seminorm(const SampledPath& p, double gamma, bool dyadic_approx = false);

/// Sup norm of the path restricted to the grid points in [s, t].
double sup_norm(const SampledPath& p, double s, double t);

/// Left-point Riemann sum Σ f(t_i)(g(t_{i+1}) − g(t_i)) on the union of both
/// grids restricted to [s, t]; both paths are linearly interpolated there.
double young_integral(const SampledPath& f, const SampledPath& g, double s, double t);

/// ||f||_∞||g||_γ (t−s)^γ + c_{γ,κ}||f||_κ||g||_γ (t−s)^{γ+κ},
/// c_{γ,κ} = (2^{γ+κ} − 2)^{-1}, with γ = g.exponent(), κ = f.exponent() and
/// all norms computed on the union grid over [s, t].
double young_bound(const SampledPath& f, const SampledPath& g, double s, double t);

/// Running Young integral θ̃_s = ∫_0^s f dθ at every point of the union grid
/// of f and θ (left-point sums).
SampledPath cumulative_young(const SampledPath& f, const SampledPath& theta);

/// Z_t = (1/Γ(α)) ∫_0^t (t−s)^{α−1} f(s) dθ_s through the absolutely
/// convergent form (α−1)/Γ(α) ∫_0^t (t−s)^{α−2} θ̃_s ds, with the singular
/// factor integrated exactly against the piecewise-linear interpolant of θ̃.
double weighted_noise(double alpha, const SampledPath& f, const SampledPath& theta, double t);

/// weighted_noise evaluated at every node of θ̃'s grid (union of f and θ).
/// Uses lag-invariant weights when that grid is uniform.
SampledPath weighted_noise_curve(double alpha, const SampledPath& f, const SampledPath& theta);

/// Direct left-point evaluation (1/Γ(α)) Σ (t−s_i)^{α−1} f(s_i)(θ_{i+1} − θ_i);
/// the second route used to cross-check weighted_noise.
double weighted_noise_direct(double alpha, const SampledPath& f, const SampledPath& theta, double t);

/// Path CSV: `# exponent=<float>` line, `t,value` header, one row per point.
void write_path_csv(std::ostream& os, const SampledPath& p);
SampledPath read_path_csv(std::istream& is);

}  // namespace fracstab
