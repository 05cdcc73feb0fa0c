#pragma once

// Non-diagonal master equation encoding: embeds the linear ODE
// d/dt mu = -V(t) mu into a completely positive evolution on one extra qubit.
// With V = B + iA (Hermitian split) the dilated generator uses H = diag(A, 0)
// and a single jump diag(G, 0), G = sqrt(2B); the upper-right block of the
// evolved state is exactly (1/2) e^{-int V} |mu_0><mu_0| restricted to the
// probe, so the unnormalized solution is read off as 2 * block * mu_0.

#include "lindode/lindblad.hpp"
#include "lindode/numkernel.hpp"
#include "lindode/odecore.hpp"

#include <utility>
#include <vector>

namespace lindode {

/// Block-embed the drift and jump operators on an extra qubit:
/// H = [[A, 0], [0, 0]], F_i = [[G_i, 0], [0, 0]]. Exact for constant and
/// knot kinds (block embedding is linear).
LindbladSpec dilate(const TimeDependentMatrix& a, const std::vector<TimeDependentMatrix>& jumps);

/// (|0> (x) mu0 + |1> (x) phi0)/sqrt(2) as a pure density matrix
/// (ancilla index is the major index). Both vectors must be unit norm.
DensityMatrix initial_state(const ComplexVector& mu0, const ComplexVector& phi0);

/// Ancilla block (s1, s2) of a state on ancilla (x) system, i.e.
/// (<s1| (x) I) rho (|s2> (x) I); s1, s2 in {0, 1}.
ComplexMatrix extract_block(const ComplexMatrix& rho, std::size_t s1, std::size_t s2);

/// Drift A(t) and jump G(t) = sqrt(2 B(t)) for the encoding of V(t).
/// Constant V yields constant operators; otherwise G is a generator-kind
/// object evaluating the PSD square root at each requested time.
std::pair<TimeDependentMatrix, TimeDependentMatrix> encoding_operators(
    const TimeDependentMatrix& v);

/// Dilated evolution over [t0, t1] from (|0> mu0 + |1> phi0)/sqrt(2) with an
/// arbitrary probe phi0. No reference cross-check; callers add their own.
DensityMatrix evolve_encoding(const TimeDependentMatrix& a,
                              const std::vector<TimeDependentMatrix>& jumps,
                              const ComplexVector& mu0, const ComplexVector& phi0,
                              double t0, double t1, std::size_t initial_steps = 1);

struct HomogeneousSolution {
    ComplexVector mu_T;   ///< normalized solution direction
    double eta = 0.0;     ///< solution norm ||e^{-int V} mu0||
    DensityMatrix rho_T;  ///< full dilated state (kept for second-stage use)
};

/// End-to-end homogeneous solve (b must be absent): checks semi-dissipativity
/// (input_error with the witness eigenvalue on failure), runs the encoding,
/// extracts (mu_T, eta), and cross-checks eta * mu_T against the adaptive
/// reference solution within 1e-7 (check_error on disagreement).
/// eta below 1e-8 is rejected: the extraction is ill-posed.
HomogeneousSolution solve_homogeneous(const OdeProblem& p, std::size_t initial_steps = 1);

/// Second evolution stage with the operators moved to the lower block
/// (H' = diag(0, A), F' = diag(0, G_i)): the upper-right block turns into
/// (eta^2/2) |mu_T><mu_T| and both diagonal blocks into the evolved sigma_T.
DensityMatrix second_stage(const DensityMatrix& rho_T, const TimeDependentMatrix& a,
                           const std::vector<TimeDependentMatrix>& jumps, double T,
                           std::size_t initial_steps = 1);

struct InhomogeneousSolution {
    ComplexVector mu_T;  ///< normalized
    double eta = 0.0;    ///< norm of the composed solution
};

/// Superposition route for d/dt mu = -V mu + b: the homogeneous encoding of
/// mu0 plus m midpoint slices, each propagating the normalized source b(t_j)
/// from t_j to T through the same encoding and weighted by (T/m) ||b(t_j)||.
/// Agrees with duhamel_compose up to the shared quadrature error.
InhomogeneousSolution inhomogeneous_solve(const OdeProblem& p, std::size_t m,
                                          std::size_t initial_steps = 1);

} // namespace lindode
