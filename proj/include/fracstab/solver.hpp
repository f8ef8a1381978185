#pragma once

#include "fracstab/paths.hpp"

#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace fracstab {

using RealFn = std::function<double(double)>;

/// The nonlinearity h of X = ξ + I^β[AX + h(X)] + Z, with the metadata the
/// stability results need. An empty `h` means h ≡ 0.
struct Nonlinearity {
    RealFn h;
    double lipschitz = 0.0;  // C in |h(x)| <= C|x|
    double delta0 = std::numeric_limits<double>::infinity();
    bool is_h1 = false;
    bool is_h2 = false;
    bool monotone = false;
    bool concave_on_positives = false;
    std::string label = "zero";

    bool is_zero() const { return !h; }
    double operator()(double x) const { return h ? h(x) : 0.0; }

    /// ĥ(x) = −h(−x), same metadata.
    Nonlinearity mirrored() const;
};

namespace initial {

struct Constant {
    double x0 = 0.0;
};

/// Interpolated linearly; must cover the solver grid.
struct Sampled {
    SampledPath path;
};

/// ξ_t = (1/Γ(η)) ∫_0^t (t−s)^{η−1} g(s) ds.
struct KernelForm {
    double eta = 1.0;
    RealFn g;
};

struct ClosedForm {
    RealFn xi;
    std::string label = "closed-form";
};

}  // namespace initial

using InitialFn = std::variant<initial::Constant, initial::Sampled, initial::KernelForm, initial::ClosedForm>;

/// Additive noise (1/Γ(α)) ∫_0^t (t−s)^{α−1} f(s) dθ_s. `f_derivative` is
/// optional and only used by routes that integrate by parts in f.
struct NoiseSpec {
    double alpha;
    SampledPath f;
    SampledPath theta;
    RealFn f_derivative;
};

struct FracIVP {
    double beta = 0.5;
    double a_coef = 0.0;
    Nonlinearity nonlinearity;
    InitialFn initial = initial::Constant{0.0};
    std::optional<NoiseSpec> noise;

    /// Throws DomainError naming the violated condition.
    void validate() const;
};

struct SchemeConfig {
    double corrector_tol = 1e-8;
    int max_iterations = 25;
    double blowup_bound = 1e6;
    double ml_tol = 1e-13;
};

struct Trajectory {
    std::vector<double> grid;
    std::vector<double> values;
    std::vector<double> noise;  // Z on the grid; empty without noise
    double defect = 0.0;
    std::vector<std::pair<std::string, std::string>> meta;  // written in order
};

/// Closed form for h ≡ 0:
///   X = ξ + A ∫ (t−s)^{β−1}E_{β,β}(A(t−s)^β) ξ_s ds + ∫ (t−s)^{α−1}E_{β,α}(A(t−s)^β) f dθ,
/// or, for a kernel-form ξ, X = ∫ (t−s)^{η−1}E_{β,η}(A(t−s)^β) g ds + noise.
/// Mittag-Leffler kernels are integrated exactly against the piecewise-linear
/// interpolant of ξ (or g) and of θ̃ = ∫ f dθ. When θ̃'s grid differs from
/// `grid`, θ̃ is interpolated linearly onto `grid`.
Trajectory solve_linear_closed_form(const FracIVP& p, const std::vector<double>& grid,
                                    const SchemeConfig& cfg = {});

/// First-order product integration of the semilinear equation with a
/// fixed-point corrector at every step (predictor: previous value). If the
/// corrector stalls, the step equation is solved by bisection; if no bracket
/// is found a ConvergenceError is thrown. |X| beyond the blow-up bound throws
/// BlowUpError.
Trajectory solve_semilinear(const FracIVP& p, const std::vector<double>& grid, const SchemeConfig& cfg = {});

/// max_n |X_n − ξ_n − (1/Γ(β)) ∫ (t_n−s)^{β−1}[AX + h(X)] ds − Z_n| with the
/// solver's own quadrature.
double residual(const FracIVP& p, const Trajectory& x, const SchemeConfig& cfg = {});

/// ξ on the grid, as the solvers see it.
std::vector<double> initial_on_grid(const InitialFn& xi, const std::vector<double>& grid);

/// Z = (1/Γ(α)) ∫ (t−s)^{α−1} f dθ on the grid.
std::vector<double> noise_on_grid(const NoiseSpec& noise, const std::vector<double>& grid);

/// θ̃_t = ∫_0^t f dθ on the grid.
std::vector<double> integrated_noise_on_grid(const NoiseSpec& noise, const std::vector<double>& grid);

/// `t,x[,z]` with `# key=value` metadata lines.
void write_trajectory_csv(std::ostream& os, const Trajectory& x);

}  // namespace fracstab
