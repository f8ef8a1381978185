#pragma once

#include "fracstab/paths.hpp"
#include "fracstab/solver.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fracstab {

/// k(s, x): measurable in s, Lipschitz in x with constant M, non-decreasing
/// in x, bounded on bounded sets.
struct ComparisonKernel {
    std::function<double(double, double)> k;
    double lipschitz = 1.0;
    bool nondecreasing = true;
    bool bounded_on_bounded = true;
    std::string label = "k";

    double operator()(double s, double x) const { return k(s, x); }
};

/// u(t) = y(t) + ∫_0^t (t−s)^{β−1} E_{β,β}(B(t−s)^β) k(s, u(s)) ds on [0, T].
struct ComparisonProblem {
    SampledPath y;
    double b_coef = 0.0;
    double beta = 0.5;
    ComparisonKernel k;
    double horizon = 1.0;

    void validate() const;
};

struct PicardOptions {
    double tol = 1e-10;       // sup-norm change between iterates
    int max_iterations = 200;
    double safety = 0.9;      // window rule T̄^β·M·M̄/β <= safety
    double ml_tol = 1e-13;
    std::optional<std::vector<double>> seed;  // v_0 on the grid; y when absent
};

struct MajorantDiagnostics {
    std::vector<double> window_lengths;
    std::vector<int> iterations;   // per window
    double kernel_bound = 0.0;     // M̄
    double contraction = 0.0;      // max T̄^β·M·M̄/β over windows
    double max_decrease = 0.0;     // most negative v_{k+1} − v_k seen (0 if monotone)
    double residual = 0.0;
};

struct MajorantResult {
    Trajectory u;
    MajorantDiagnostics diagnostics;
};

/// Picard iteration window by window, each window short enough for the map to
/// contract. Throws DomainError if a window would be shorter than one grid
/// step and ConvergenceError if Picard does not settle.
MajorantResult majorant_solve(const ComparisonProblem& cp, const std::vector<double>& grid,
                              const PicardOptions& opts = {});

/// max_n |u_n − y_n − Σ_m W_n(m) k(t_{n−m}, u_{n−m})|.
double majorant_residual(const ComparisonProblem& cp, const Trajectory& u, double ml_tol = 1e-13);

struct DominationReport {
    bool holds = false;
    double min_margin = 0.0;          // min(u − x)
    bool hypothesis_violated = false;
    double hypothesis_margin = 0.0;   // min of RHS(9) − x
};

/// Checks the integral inequality for x on the grid, then x <= u + tol. When
/// the inequality fails, `holds` is false and the conclusion is not claimed.
DominationReport domination_check(const Trajectory& x, const ComparisonProblem& cp, const Trajectory& u,
                                  double tol = 1e-8);
DominationReport domination_check(const Trajectory& x, const ComparisonProblem& cp, double tol = 1e-8);

}  // namespace fracstab
