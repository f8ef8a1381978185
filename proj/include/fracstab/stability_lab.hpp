#pragma once

#include "fracstab/comparison.hpp"
#include "fracstab/paths.hpp"
#include "fracstab/solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fracstab::lab {

// ---------------------------------------------------------------------------
// Initial-condition classes

enum class ICTag { E1, E2, E3, E4, Sum };

std::string to_string(ICTag tag);

/// An initial condition together with the class it is claimed to belong to.
/// Build through the named constructors; only the fields of the tag are used.
struct ICClass {
    ICTag tag = ICTag::E1;

    // E1: continuous with ξ_t → ξ_∞.
    std::optional<SampledPath> path;
    double limit = 0.0;

    // E2: C¹ with |ξ'_t| <= C̃ t^{υ−1}, υ ∈ (0, β).
    RealFn xi;
    RealFn derivative;
    double c_tilde = 0.0;
    double upsilon = 0.0;

    // E3: ξ = I^η g, g ∈ L¹ ∩ L^p, η ∈ (0, β+1), p > max(1/η, 1).
    // E4: ξ = I^β g, g continuous with g(t) → 0.
    RealFn g;
    double eta = 0.0;
    double p = 0.0;

    std::vector<ICClass> components;  // Sum

    static ICClass e1(SampledPath path, double limit);
    static ICClass e2(RealFn xi, RealFn derivative, double c_tilde, double upsilon);
    static ICClass e3(RealFn g, double eta, double p);
    static ICClass e4(RealFn g, double beta);
    static ICClass sum(std::vector<ICClass> components);

    /// Checks the per-tag parameter ranges. Throws DomainError.
    void validate(double beta) const;

    /// The component as the solver sees it (Sum is not representable).
    InitialFn initial() const;
};

struct NormOptions {
    double horizon = 100.0;           // T_∞ for sup norms of closed forms
    std::size_t eval_points = 20000;  // sup-norm evaluation grid, denser near 0
    double quad_tol = 1e-10;
};

/// ‖ξ‖_∞ over the path grid (E1); ‖ξE_{β,1}(A·^β)‖_∞ + ‖·^{1−υ}ξ'‖_∞ (E2);
/// ‖g‖_{L¹} + ‖g‖_{L^p} over [0, ∞) by adaptive quadrature (E3); ‖g‖_∞ (E4);
/// the sum over components (Sum). Throws ConvergenceError when an E3
/// quadrature misses its tolerance.
double class_norm(const ICClass& c, double a_coef, double beta, const NormOptions& opts = {});

/// ξ on a grid; Sum adds its components.
std::vector<double> class_on_grid(const ICClass& c, const std::vector<double>& grid);

/// The linear solution Y = ξ + I^β[AY] through the closed form, component by
/// component for Sum.
Trajectory linear_response(const ICClass& c, double a_coef, double beta, const std::vector<double>& grid);

/// Empirical C_{a,b}: ml::bound_constant over z = λ s^a for 512 values of s
/// in [0, horizon] (clipped to the supported argument range).
double empirical_constant(double a, double b, double lambda, double horizon);

/// Upper bound for sup_{t<=T} |Y(t)| that the stability argument gives:
///   E1  ‖ξ‖_∞ (1 + C_{β,β+1})
///   E2  a + (|A|/υ) b sup_t J(t),  a, b the two terms of the norm and
///       J(t) = t^{β+υ}[E_{β,β+1}(At^β) − Γ(υ+1)E_{β,β+υ+1}(At^β)]
///   E3  C_{β,η}[(q(η−1)+1)^{−1/q} ‖g‖_{L^p} + ‖g‖_{L¹}/|A|],  1/q = 1 − 1/p
///   E4  (C_{β,β+1}/|A|) ‖g‖_∞
///   Sum the sum of the component bounds.
/// Requires A < 0.
double class_bound(const ICClass& c, double a_coef, double beta, double horizon, const NormOptions& opts = {});

// ---------------------------------------------------------------------------
// Verdicts

struct Verdict {
    std::string name;
    bool holds = false;
    double margin = 0.0;     // smallest slack; negative when violated
    double where = 0.0;      // time of the smallest slack
    std::string detail;
};

struct StabilityReport {
    std::vector<std::pair<std::string, std::string>> parameters;
    std::vector<Verdict> verdicts;

    bool all_hold() const;
};

/// `key: value` blocks, one per verdict after a parameter block.
void write_report(std::ostream& os, const StabilityReport& r);

/// |X(t)| <= [m E_{β,1}(B t^β)]^b + tol on every grid point. The margin is
/// the smallest envelope − |X| over the grid.
Verdict ml_envelope_check(const Trajectory& x, double m_x0, double b_exp, double b_coef, double beta,
                          double tol = 1e-12);

/// min X > 0 on the grid.
Verdict positivity_check(const Trajectory& x);

/// Finite-horizon proxy for X(t) → 0: |X| <= rel · sup|X| on the last
/// `tail_fraction` of the grid. Evidence only, not a proof.
Verdict decay_check(const Trajectory& x, double rel = 1e-2, double tail_fraction = 0.1);

/// sup|X| <= bound + tol.
Verdict bound_check(const Trajectory& x, double bound, double tol = 1e-9);

/// |X| <= u + |Y| with u the majorant of
///   u = C (K_A * |Y|) + C (K_A * u),  K_A(r) = r^{β−1}E_{β,β}(A r^β),
/// the resolvent form of u = I^β[C|Y| + (A+C)u]. x and y share the grid.
struct ReductionResult {
    Verdict verdict;
    Trajectory u;
};
ReductionResult reduction_check(const FracIVP& p, const Trajectory& x, const Trajectory& y, double tol = 1e-8);

// ---------------------------------------------------------------------------
// Noise

struct NoiseBudgetOptions {
    double horizon = 100.0;      // T_∞
    double overflow = 1e300;
    double quad_tol = 1e-10;
};

struct NoiseBudget {
    double l1_ftheta = 0.0;
    double lp_ftheta = 0.0;
    double l1_dftheta = 0.0;
    // ∫_{T_∞}^∞ of the same integrands (the L^p tail before the root).
    double tail_l1_ftheta = 0.0;
    double tail_lp_ftheta = 0.0;
    double tail_l1_dftheta = 0.0;
    bool exponents_ok = false;   // p > 1/(α−1) and β+1 > α
    bool admissible = false;
    std::string reason;
};

/// ‖fθ‖_{L¹}, ‖fθ‖_{L^p}, ‖ḟθ‖_{L¹} on [0, T_∞] with tails reported
/// separately. Throws NumericError when an integral is divergent (non-finite
/// or above the overflow bound).
NoiseBudget noise_budget(double alpha, double beta, const RealFn& f, const RealFn& df, const RealFn& theta,
                         double p, const NoiseBudgetOptions& opts = {});

/// Two routes to ∫_0^t (t−s)^{α−1}E_{β,α}(A(t−s)^β) f(s) dθ_s on a uniform grid:
/// `response` convolves the kernel's derivative with θ̃ = ∫ f dθ, while
/// `i31 + i32` integrates θf and θḟ separately.
struct NoiseSplit {
    std::vector<double> grid;
    std::vector<double> response;
    std::vector<double> i31;
    std::vector<double> i32;
};
NoiseSplit noise_split(double beta, double a_coef, double alpha, const RealFn& f, const RealFn& df,
                       const SampledPath& theta, const std::vector<double>& grid);

// ---------------------------------------------------------------------------
// Examples

/// 1 − e^{−Cx} for x >= 0 and e^{Cx} − 1 for x < 0.
double example_h(double c, double x);

/// example_h as a Nonlinearity with the flags the stability results check.
Nonlinearity example_nonlinearity(double c);

/// ξ_t = g(t) sin(1/t), g = ψ c₀ t^{3−υ} + φ c₁/(1+t), with ψ a quintic
/// smooth step (1 on [0,1], 0 on [2,∞)) and φ = 1 − ψ.
struct XiExample {
    double upsilon = 0.25;
    double c0 = 1.0;
    double c1 = 1.0;
};
double example_xi(const XiExample& e, double t);
double example_xi_derivative(const XiExample& e, double t);

// ---------------------------------------------------------------------------
// Monte Carlo

/// The semilinear problem with θ replaced by independent fBm paths.
/// `problem.noise` must be set; its θ is ignored and f is used as given.
struct McConfig {
    FracIVP problem;
    double hurst = 0.8;
    std::size_t n_paths = 200;
    std::uint64_t seed = 0;
    std::vector<double> grid;
    unsigned jobs = 0;          // 0: hardware concurrency
    bool keep_paths = false;
    SchemeConfig scheme;

    // Deterministic envelope u¹ + u² with θ_s = s^H; needs the means of the
    // non-negative non-decreasing parts of ξ = ξ¹ − ξ².
    bool envelope = false;
    InitialFn xi_plus = initial::Constant{0.0};
    InitialFn xi_minus = initial::Constant{0.0};
};

struct McResult {
    std::vector<double> grid;
    std::vector<double> mean_abs;        // (1/n) Σ |X_i(t)|
    std::vector<double> std_error;       // sample sd of |X_i(t)| / √n
    std::size_t used = 0;
    std::size_t failed = 0;
    std::vector<std::string> failures;   // "path <i>: <message>"
    std::vector<std::vector<double>> paths;  // successful paths in index order
    std::optional<std::vector<double>> envelope;
};

/// Paths are seeded with derive_seed(seed, i) and reduced in index order, so
/// the result does not depend on the number of workers. Paths whose solve
/// throws NumericError are skipped and counted.
McResult mean_stability_mc(const McConfig& cfg);

/// The envelope of the Monte Carlo run alone.
std::vector<double> mean_envelope(const McConfig& cfg);

}  // namespace fracstab::lab
