#pragma once

// Open-system layer: the generator rho' = -i[H, rho] + sum_i (F_i rho F_i^H
// - {rho, F_i^H F_i}/2), its vectorized (row-major) matrix form, completely
// positive trace-preserving propagation, and a stochastic unraveling whose
// ensemble mean reproduces the same dynamics.

#include "lindode/numkernel.hpp"
#include "lindode/odecore.hpp"

#include <cstdint>
#include <vector>

namespace lindode {

/// Hamiltonian + jump operators, all possibly time dependent, same dimension.
/// H(t) must be Hermitian within 1e-10 at every sampled time.
struct LindbladSpec {
    TimeDependentMatrix H;
    std::vector<TimeDependentMatrix> jumps;
    std::size_t dim = 0;

    static LindbladSpec make(TimeDependentMatrix H, std::vector<TimeDependentMatrix> jumps);
};

/// Validation report for a candidate density matrix.
struct StateCheck {
    double hermiticity_defect = 0.0;  ///< max |rho - rho^H| entry
    double trace_defect = 0.0;        ///< |tr rho - 1|
    double min_eigenvalue = 0.0;
    bool ok = false;  ///< defects within (1e-10, 1e-10) and eigmin >= -1e-8
};

/// Validation report for a candidate channel in superoperator form.
struct ChannelCheck {
    double choi_min_eigenvalue = 0.0;  ///< relative to the largest Choi eigenvalue
    double tp_defect = 0.0;            ///< max |vec(I)^H Phi - vec(I)^H| entry
    bool ok = false;  ///< Choi >= -1e-9 (relative) and tp_defect <= 1e-9
};

StateCheck cptp_check(const ComplexMatrix& rho);
ChannelCheck cptp_check_channel(const ComplexMatrix& superop);

/// Hermitian, unit-trace, PSD-within-noise matrix. Construction validates.
class DensityMatrix {
public:
    /// Throws input_error if the candidate fails cptp_check.
    static DensityMatrix from_matrix(ComplexMatrix rho);
    /// Rank-one projector |psi><psi| for a unit vector.
    static DensityMatrix pure(const ComplexVector& psi);

    const ComplexMatrix& matrix() const { return rho_; }
    std::size_t dim() const { return rho_.rows(); }

private:
    explicit DensityMatrix(ComplexMatrix rho) : rho_(std::move(rho)) {}
    ComplexMatrix rho_;
};

/// Generator applied to a state at time t (not itself a density matrix:
/// it is a traceless Hermitian direction).
ComplexMatrix apply_generator(const LindbladSpec& spec, const ComplexMatrix& rho, double t);

/// Matrix of the generator on row-major vec:
///   L = -i (H (x) I - I (x) H^T)
///       + sum_i [ F_i (x) F_i^* - (F_i^H F_i (x) I)/2 - (I (x) F_i^T F_i^*)/2 ].
/// Tested to agree with apply_generator to 1e-12.
ComplexMatrix liouvillian_matrix(const LindbladSpec& spec, double t);

/// Evolve rho0 from t0 to t1. Constant generators go through the scaled
/// Taylor exponential applied to vec(rho0); time-dependent ones use the
/// midpoint-exponential product formula, doubling the substep count from
/// max(initial_steps, ceil((t1-t0) ||L||)) until the result moves by less
/// than 1e-10 in trace norm. Output is validated (check_error if not CPTP).
DensityMatrix propagate(const LindbladSpec& spec, const DensityMatrix& rho0,
                        double t0, double t1, std::size_t initial_steps = 1);
/// [0, T] convenience form.
DensityMatrix propagate(const LindbladSpec& spec, const DensityMatrix& rho0, double T);

/// Full superoperator of the evolution over [0, T]; validated CPTP
/// (check_error on failure) with the same step control as propagate.
ComplexMatrix propagator_channel(const LindbladSpec& spec, double T,
                                 std::size_t initial_steps = 1);

/// Euler-Maruyama ensemble of d|psi> = -i H_eff psi dt + sum_i G_i psi dW_i,
/// H_eff = H - (i/2) sum_i G_i^H G_i, real Wiener increments, no per-trajectory
/// normalization: the ensemble mean of psi psi^H estimates propagate's output.
struct SdeResult {
    ComplexMatrix mean;    ///< ensemble mean of psi psi^H (trace 1 only up to sampling noise)
    ComplexMatrix stderr_; ///< entrywise standard error sqrt((var_re + var_im)/n)
    std::size_t n_traj = 0;
    double dt = 0.0;
};

/// Constant-spec only. Trajectory r uses an RNG stream derived from
/// (seed, r), so results are identical for any thread count.
SdeResult sde_ensemble(const LindbladSpec& spec, const ComplexVector& psi0, double T,
                       double dt, std::size_t n_traj, std::uint64_t seed);

} // namespace lindode
