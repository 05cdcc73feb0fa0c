#pragma once

#include "lindode/numkernel.hpp"
#include "lindode/odecore.hpp"

#include <cstddef>
#include <vector>

namespace lindode {

/// Odd polynomial P(x) = sum_j coefficients[j] * T_{2j+1}(x) certified to
/// approximate (1/2)*sqrt(x) on [delta, 1].  Oddness (and hence P(0) = 0) is
/// exact by construction: only odd-index Chebyshev coefficients are stored.
struct OddChebyPoly {
    std::vector<double> coefficients; // coefficients[j] multiplies T_{2j+1}
    double delta = 0.0;               // left end of the certified interval
    double eps = 0.0;                 // certified sup error of P - sqrt(x)/2 on [delta,1]
    bool bound_ok = false;            // max_{[-1,1]} |P| <= 1 verified

    std::size_t degree() const {
        return coefficients.empty() ? 0 : 2 * coefficients.size() - 1;
    }
};

/// Hermitian matrix together with a normalization alpha >= ||matrix||.
struct ScaledHermitian {
    ComplexMatrix matrix;
    double alpha = 1.0;

    /// Validates Hermiticity and alpha >= spectral norm (1e-10 slack).
    static ScaledHermitian make(ComplexMatrix m, double alpha);
};

/// Least-squares fit of (1/2)*sqrt(x) on [delta,1] by an odd Chebyshev
/// series, degree grown (doubling, then minimal-count refinement) until a
/// dense-grid certification passes.  Requires delta, eps in (0, 1/2].
/// Throws input_error if the 5000-degree cap is hit (message carries the
/// error achieved at the cap).
OddChebyPoly fit_odd_sqrt(double delta, double eps);

/// Clenshaw evaluation; requires |x| <= 1.
double eval_poly(const OddChebyPoly& p, double x);

/// Applies P to each eigenvalue of s.matrix / s.alpha (spectral calculus).
ComplexMatrix apply_poly(const OddChebyPoly& p, const ScaledHermitian& s);

/// Approximate jump operator 2*sqrt(2*alpha) * P(B/alpha) ~= sqrt(2B) for PSD
/// B whose nonzero spectrum, scaled by alpha, lies in [delta, 1].  Eigenvalues
/// below the kernel threshold are mapped to exactly zero; eigenvalues inside
/// (0, delta) are rejected with the offending value named.
ComplexMatrix approx_jump_operator(const ComplexMatrix& b, double alpha, double delta,
                                   double eps);

/// Outcome of the end-to-end solve that only touches V through the fitted
/// square-root polynomial.
struct DirectAccessReport {
    ComplexVector mu_T;          // normalized final state
    double eta = 0.0;            // 2-norm of the unnormalized final state
    bool used_polynomial = false;
    OddChebyPoly poly;           // empty when the dissipative part vanishes
    double delta_used = 0.0;     // scaled spectral floor handed to the fit
    double eps_prime = 0.0;      // per-operator tolerance allocated to the fit
    double error_vs_reference = 0.0; // 2-norm gap to the adaptive reference
    double predicted_queries = 0.0;  // bound-calculator value, unit constants
};

/// Solves dmu/dt = -V(t) mu via the dilation encoding with the jump operator
/// replaced by the polynomial approximation at tolerance
/// eps_prime = eps_target * eta / (10 * max(T,1)).  Verifies the final
/// normalized state against the adaptive reference within eps_target
/// (check_error on violation).  delta_override > 0 skips the automatic
/// spectral-gap scan.  Homogeneous problems only.
DirectAccessReport direct_access_pipeline(const OdeProblem& p, double eps_target,
                                          double delta_override = 0.0);

} // namespace lindode
