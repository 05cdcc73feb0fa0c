#pragma once

// Classical ODE layer: the linear problem d/dt mu = -V(t) mu + b(t), its
// adaptive reference integrator, and the structural checks (Hermitian split,
// semi-dissipativity, spectral gap) every encoding pipeline relies on.

#include "lindode/numkernel.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lindode {

/// Matrix-valued function of time. Three kinds:
///   * constant;
///   * knots: piecewise-linear interpolation of (t_k, M_k) samples, clamped
///     to the end matrices outside the knot range;
///   * generator: an arbitrary named callable (used for derived quantities
///     like sqrt(2 B(t)) that are not piecewise linear in t).
class TimeDependentMatrix {
public:
    enum class Kind { constant, knots, generator };

    static TimeDependentMatrix constant(ComplexMatrix m);
    static TimeDependentMatrix knots(std::vector<double> times, std::vector<ComplexMatrix> values);
    static TimeDependentMatrix generator(std::string name,
                                         std::function<ComplexMatrix(double)> fn,
                                         std::size_t dim);

    Kind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }
    bool is_constant() const { return kind_ == Kind::constant; }
    ComplexMatrix eval(double t) const;

    /// The stored matrix (constant kind only).
    const ComplexMatrix& constant_value() const;
    const std::vector<double>& knot_times() const { return times_; }
    const std::vector<ComplexMatrix>& knot_values() const { return values_; }
    const std::string& name() const { return name_; }

    /// Upper bound on ||dM/dt|| from knot differences (Frobenius); zero for
    /// constant matrices, throws for generator kind (no structure to bound).
    double knot_rate_bound() const;

    /// New object of the same kind with f applied to every value; linear maps
    /// commute with piecewise-linear interpolation, so the knot kind stays
    /// exact under this transform.
    TimeDependentMatrix map(const std::string& suffix,
                            std::function<ComplexMatrix(const ComplexMatrix&)> f) const;

private:
    Kind kind_ = Kind::constant;
    std::size_t dim_ = 0;
    ComplexMatrix constant_;
    std::vector<double> times_;
    std::vector<ComplexMatrix> values_;
    std::function<ComplexMatrix(double)> fn_;
    std::string name_;
};

/// d/dt mu = -V(t) mu + b(t), mu(0) = mu0 (unit norm), evolved to time T.
struct OdeProblem {
    std::size_t dim = 0;
    TimeDependentMatrix V;
    ComplexVector mu0;
    std::optional<TimeDependentMatrix> b;  ///< column vectors stored as dim x 1 matrices
    double T = 0.0;

    /// Validates shapes, unit mu0 (within 1e-12) and T >= 0.
    static OdeProblem make(TimeDependentMatrix V, ComplexVector mu0, double T,
                           std::optional<TimeDependentMatrix> b = std::nullopt);
};

struct Trajectory {
    std::vector<double> times;
    std::vector<ComplexVector> states;

    const ComplexVector& final_state() const { return states.back(); }
    double final_eta() const { return vnorm(states.back()); }
};

/// V = B + iA with A = (V - V^H)/(2i) Hermitian and B = (V + V^H)/2 Hermitian.
struct HermitianSplit {
    ComplexMatrix A;
    ComplexMatrix B;
};

HermitianSplit hermitian_split(const ComplexMatrix& v);
/// Same split applied across time; exact for constant and knot kinds.
std::pair<TimeDependentMatrix, TimeDependentMatrix> hermitian_split(const TimeDependentMatrix& v);

struct DissipativityVerdict {
    bool ok = false;
    double worst_t = 0.0;
    double worst_eigenvalue = 0.0;  ///< most negative min-eigenvalue of B(t) found
};

/// Checks min eig B(t) >= -1e-8 on a uniform grid over [0, T] (default 64
/// points) plus every knot time.
DissipativityVerdict check_semi_dissipative(const TimeDependentMatrix& v, double T,
                                            std::size_t grid_points = 64);

/// Smallest nonzero eigenvalue of a PSD matrix; eigenvalues at or below
/// 1e-12 * ||B|| count as the kernel. Throws if the nonzero spectrum is empty.
double spectral_gap(const ComplexMatrix& b);
/// Minimum of spectral_gap(B(t)) over the dissipativity grid.
double spectral_gap_min(const TimeDependentMatrix& b, double T, std::size_t grid_points = 64);

/// Adaptive Dormand-Prince 4(5) integration of an arbitrary linear system
/// d/dt y = -V(t) y + b(t) from t0 to t1 (no normalization requirements; this
/// is the workhorse the contracted entry points wrap).
ComplexVector integrate_linear(const TimeDependentMatrix& v,
                               const std::optional<TimeDependentMatrix>& b,
                               const ComplexVector& y0, double t0, double t1,
                               double rtol);

/// Reference solution of the problem with accepted-step outputs. For constant
/// V without a source term the endpoint is cross-checked against
/// expm(-V T) mu0 within 10*rtol (check_error on disagreement).
Trajectory reference_solve(const OdeProblem& p, double rtol = 1e-10);

/// Superposition form of the inhomogeneous solution: homogeneous propagation
/// of mu0 plus the midpoint-rule Duhamel quadrature with m slices, each slice
/// propagated by the same adaptive integrator. Second-order accurate in 1/m.
ComplexVector duhamel_compose(const OdeProblem& p, std::size_t m, double rtol = 1e-10);

} // namespace lindode
