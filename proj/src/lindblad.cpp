#include "lindode/lindblad.hpp"
#include "lindode/errors.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace lindode {

namespace {

/// Times at which a time-dependent operator is sampled for validation.
std::vector<double> sample_times(const TimeDependentMatrix& m) {
    if (m.kind() == TimeDependentMatrix::Kind::knots) return m.knot_times();
    return {0.0};
}

} // namespace

LindbladSpec LindbladSpec::make(TimeDependentMatrix H, std::vector<TimeDependentMatrix> jumps) {
    LindbladSpec spec;
    spec.dim = H.dim();
    for (const auto& j : jumps)
        if (j.dim() != H.dim())
            throw input_error("LindbladSpec: jump operator dimension differs from H");
    for (double t : sample_times(H)) {
        const ComplexMatrix h = H.eval(t);
        ComplexMatrix defect = h;
        defect -= h.adjoint();
        if (defect.max_abs() > 1e-10 * std::max(1.0, h.max_abs())) {
            std::ostringstream os;
            os << "LindbladSpec: H(t) not Hermitian at t = " << t;
            throw input_error(os.str());
        }
    }
    spec.H = std::move(H);
    spec.jumps = std::move(jumps);
    return spec;
}

// ---- validation ------------------------------------------------------------------

StateCheck cptp_check(const ComplexMatrix& rho) {
    StateCheck c;
    if (!rho.is_square()) throw input_error("cptp_check: matrix not square");
    ComplexMatrix defect = rho;
    defect -= rho.adjoint();
    c.hermiticity_defect = defect.max_abs();
    c.trace_defect = std::abs(rho.trace() - cplx(1.0));
    // Eigenvalues of the Hermitian part (equals rho when the defect is small).
    ComplexMatrix herm = rho;
    herm += rho.adjoint();
    herm *= cplx(0.5);
    c.min_eigenvalue = herm_eig(herm).eigenvalues.front();
    c.ok = c.hermiticity_defect <= 1e-10 && c.trace_defect <= 1e-10 &&
           c.min_eigenvalue >= -1e-8;
    return c;
}

ChannelCheck cptp_check_channel(const ComplexMatrix& superop) {
    ChannelCheck c;
    const ComplexMatrix choi = choi_matrix(superop);
    const HermitianEig eig = herm_eig(choi);
    const double lam_max = std::max({1e-300, std::abs(eig.eigenvalues.back()),
                                     std::abs(eig.eigenvalues.front())});
    c.choi_min_eigenvalue = eig.eigenvalues.front() / lam_max;

    const auto d = static_cast<std::size_t>(
        std::llround(std::sqrt(static_cast<double>(superop.rows()))));
    double tp = 0.0;
    for (std::size_t col = 0; col < d * d; ++col) {
        cplx s = 0.0;
        for (std::size_t m = 0; m < d; ++m) s += superop(m * d + m, col);
        const cplx want = (col / d == col % d) ? 1.0 : 0.0;
        tp = std::max(tp, std::abs(s - want));
    }
    c.tp_defect = tp;
    c.ok = c.choi_min_eigenvalue >= -1e-9 && c.tp_defect <= 1e-9;
    return c;
}

DensityMatrix DensityMatrix::from_matrix(ComplexMatrix rho) {
    const StateCheck c = cptp_check(rho);
    if (!c.ok) {
        std::ostringstream os;
        os << "DensityMatrix: validation failed (hermiticity " << c.hermiticity_defect
           << ", trace defect " << c.trace_defect << ", min eigenvalue " << c.min_eigenvalue
           << ")";
        throw input_error(os.str());
    }
    return DensityMatrix(std::move(rho));
}

DensityMatrix DensityMatrix::pure(const ComplexVector& psi) {
    if (std::abs(vnorm(psi) - 1.0) > 1e-12)
        throw input_error("DensityMatrix::pure: vector is not normalized");
    return DensityMatrix(outer(psi, psi));
}

// ---- generator --------------------------------------------------------------------

ComplexMatrix apply_generator(const LindbladSpec& spec, const ComplexMatrix& rho, double t) {
    if (rho.rows() != spec.dim || rho.cols() != spec.dim)
        throw input_error("apply_generator: state dimension mismatch");
    const ComplexMatrix h = spec.H.eval(t);
    ComplexMatrix out = h * rho - rho * h;
    out *= cplx(0.0, -1.0);
    for (const auto& jump : spec.jumps) {
        const ComplexMatrix f = jump.eval(t);
        const ComplexMatrix fdf = f.adjoint() * f;
        ComplexMatrix gain = f * rho * f.adjoint();
        ComplexMatrix loss = fdf * rho + rho * fdf;
        loss *= cplx(0.5);
        out += gain;
        out -= loss;
    }
    return out;
}

ComplexMatrix liouvillian_matrix(const LindbladSpec& spec, double t) {
    const std::size_t d = spec.dim;
    const ComplexMatrix id = ComplexMatrix::identity(d);
    const ComplexMatrix h = spec.H.eval(t);

    ComplexMatrix l = kron(h, id) - kron(id, h.transpose());
    l *= cplx(0.0, -1.0);
    for (const auto& jump : spec.jumps) {
        const ComplexMatrix f = jump.eval(t);
        const ComplexMatrix fdf = f.adjoint() * f;
        l += kron(f, f.conj());
        ComplexMatrix anti = kron(fdf, id) + kron(id, fdf.transpose());
        anti *= cplx(0.5);
        l -= anti;
    }
    return l;
}

// ---- propagation ---------------------------------------------------------------------

namespace {

bool spec_is_constant(const LindbladSpec& spec) {
    if (!spec.H.is_constant()) return false;
    for (const auto& j : spec.jumps)
        if (!j.is_constant()) return false;
    return true;
}

/// One pass of the midpoint-exponential product formula on a vectorized state.
ComplexVector midpoint_product(const LindbladSpec& spec, ComplexVector v, double t0,
                               double t1, std::size_t steps) {
    const double dt = (t1 - t0) / static_cast<double>(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double tm = t0 + (static_cast<double>(k) + 0.5) * dt;
        ComplexMatrix l = liouvillian_matrix(spec, tm);
        l *= cplx(dt);
        v = expm_multiply(l, v);
    }
    return v;
}

std::size_t initial_step_count(const LindbladSpec& spec, double t0, double t1,
                               std::size_t initial_steps) {
    // Probe the generator magnitude on a coarse grid to seed the resolution.
    double nrm = 0.0;
    for (int k = 0; k < 5; ++k) {
        const double t = t0 + (t1 - t0) * (static_cast<double>(k) + 0.5) / 5.0;
        nrm = std::max(nrm, frobenius_norm(liouvillian_matrix(spec, t)));
    }
    const double suggested = std::ceil((t1 - t0) * nrm);
    std::size_t n = std::max<std::size_t>(initial_steps, 1);
    if (suggested > static_cast<double>(n) && suggested < 1e7)
        n = static_cast<std::size_t>(suggested);
    return n;
}

ComplexVector propagate_vec(const LindbladSpec& spec, const ComplexVector& v0, double t0,
                            double t1, std::size_t initial_steps) {
    if (!(t1 >= t0)) throw input_error("propagate: backwards interval");
    if (t1 == t0) return v0;
    if (spec_is_constant(spec)) {
        ComplexMatrix l = liouvillian_matrix(spec, t0);
        l *= cplx(t1 - t0);
        return expm_multiply(l, v0);
    }
    std::size_t steps = initial_step_count(spec, t0, t1, initial_steps);
    ComplexVector prev = midpoint_product(spec, v0, t0, t1, steps);
    for (int doubling = 0; doubling < 16; ++doubling) {
        steps *= 2;
        ComplexVector next = midpoint_product(spec, v0, t0, t1, steps);
        ComplexMatrix diff = unvec(vsub(next, prev));
        if (trace_norm(diff) < 1e-10) return next;
        prev = std::move(next);
    }
    throw check_error("propagate: substep doubling did not converge within 16 rounds");
}

} // namespace

DensityMatrix propagate(const LindbladSpec& spec, const DensityMatrix& rho0, double t0,
                        double t1, std::size_t initial_steps) {
    if (rho0.dim() != spec.dim) throw input_error("propagate: state dimension mismatch");
    ComplexVector v = propagate_vec(spec, vec_mat(rho0.matrix()), t0, t1, initial_steps);
    ComplexMatrix rho = unvec(v);
    // Trim rounding asymmetry before validation; the defect itself is checked.
    const StateCheck c = cptp_check(rho);
    if (!c.ok) {
        std::ostringstream os;
        os << "propagate: output failed CPTP validation (hermiticity " << c.hermiticity_defect
           << ", trace defect " << c.trace_defect << ", min eigenvalue " << c.min_eigenvalue
           << ")";
        throw check_error(os.str());
    }
    ComplexMatrix sym = rho;
    sym += rho.adjoint();
    sym *= cplx(0.5);
    return DensityMatrix::from_matrix(std::move(sym));
}

DensityMatrix propagate(const LindbladSpec& spec, const DensityMatrix& rho0, double T) {
    return propagate(spec, rho0, 0.0, T);
}

ComplexMatrix propagator_channel(const LindbladSpec& spec, double T, std::size_t initial_steps) {
    if (!(T >= 0.0)) throw input_error("propagator_channel: negative T");
    const std::size_t d2 = spec.dim * spec.dim;
    ComplexMatrix phi;
    if (spec_is_constant(spec) || T == 0.0) {
        ComplexMatrix l = liouvillian_matrix(spec, 0.0);
        l *= cplx(T);
        phi = expm(l);
    } else {
        auto product = [&](std::size_t steps) {
            const double dt = T / static_cast<double>(steps);
            ComplexMatrix acc = ComplexMatrix::identity(d2);
            for (std::size_t k = 0; k < steps; ++k) {
                ComplexMatrix l = liouvillian_matrix(spec, (static_cast<double>(k) + 0.5) * dt);
                l *= cplx(dt);
                acc = expm(l) * acc;
            }
            return acc;
        };
        std::size_t steps = initial_step_count(spec, 0.0, T, initial_steps);
        ComplexMatrix prev = product(steps);
        bool converged = false;
        for (int doubling = 0; doubling < 16 && !converged; ++doubling) {
            steps *= 2;
            ComplexMatrix next = product(steps);
            ComplexMatrix diff = next;
            diff -= prev;
            converged = diff.max_abs() < 1e-10;
            prev = std::move(next);
        }
        if (!converged)
            throw check_error("propagator_channel: substep doubling did not converge");
        phi = std::move(prev);
    }
    const ChannelCheck c = cptp_check_channel(phi);
    if (!c.ok) {
        std::ostringstream os;
        os << "propagator_channel: CPTP validation failed (Choi min eigenvalue "
           << c.choi_min_eigenvalue << ", trace-preservation defect " << c.tp_defect << ")";
        throw check_error(os.str());
    }
    return phi;
}

// ---- stochastic unraveling ------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

} // namespace

SdeResult sde_ensemble(const LindbladSpec& spec, const ComplexVector& psi0, double T,
                       double dt, std::size_t n_traj, std::uint64_t seed) {
    if (!spec_is_constant(spec))
        throw input_error("sde_ensemble: only constant generators are supported");
    if (psi0.size() != spec.dim) throw input_error("sde_ensemble: state dimension mismatch");
    if (!(dt > 0.0) || !(T >= 0.0)) throw input_error("sde_ensemble: need dt > 0 and T >= 0");
    if (n_traj == 0) throw input_error("sde_ensemble: need at least one trajectory");

    const std::size_t d = spec.dim;
    const ComplexMatrix h = spec.H.eval(0.0);
    std::vector<ComplexMatrix> g;
    for (const auto& j : spec.jumps) g.push_back(j.eval(0.0));

    // Drift matrix -i H_eff = -i H - (1/2) sum G^H G.
    ComplexMatrix drift = h;
    drift *= cplx(0.0, -1.0);
    for (const auto& gi : g) {
        ComplexMatrix half = gi.adjoint() * gi;
        half *= cplx(0.5);
        drift -= half;
    }

    const std::size_t n_steps = (T == 0.0) ? 0 : static_cast<std::size_t>(std::ceil(T / dt - 1e-12));
    std::vector<ComplexVector> finals(n_traj);

    const std::ptrdiff_t nt = static_cast<std::ptrdiff_t>(n_traj);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < nt; ++r) {
        std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(r))));
        std::normal_distribution<double> gauss(0.0, 1.0);
        ComplexVector psi = psi0;
        double t = 0.0;
        for (std::size_t s = 0; s < n_steps; ++s) {
            const double step = std::min(dt, T - t);
            const double root_step = std::sqrt(step);
            ComplexVector dpsi = matvec(drift, psi);
            for (auto& z : dpsi) z *= step;
            for (const auto& gi : g) {
                const double dw = gauss(rng) * root_step;
                ComplexVector kick = matvec(gi, psi);
                for (std::size_t i = 0; i < d; ++i) dpsi[i] += dw * kick[i];
            }
            for (std::size_t i = 0; i < d; ++i) psi[i] += dpsi[i];
            t += step;
        }
        finals[static_cast<std::size_t>(r)] = std::move(psi);
    }

    // Fixed-order reduction: mean, then entrywise variance of re/im parts.
    SdeResult out;
    out.n_traj = n_traj;
    out.dt = dt;
    out.mean = ComplexMatrix(d, d);
    for (const auto& psi : finals) {
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                out.mean(i, j) += psi[i] * std::conj(psi[j]);
    }
    out.mean *= cplx(1.0 / static_cast<double>(n_traj));

    out.stderr_ = ComplexMatrix(d, d);
    ComplexMatrix acc(d, d);  // accumulates (var_re, var_im) pairs in re/im slots
    for (const auto& psi : finals) {
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                const cplx dev = psi[i] * std::conj(psi[j]) - out.mean(i, j);
                acc(i, j) += cplx(dev.real() * dev.real(), dev.imag() * dev.imag());
            }
    }
    const double denom = static_cast<double>(n_traj) *
                         static_cast<double>(n_traj > 1 ? n_traj - 1 : 1);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            out.stderr_(i, j) = std::sqrt((acc(i, j).real() + acc(i, j).imag()) / denom);
    return out;
}

} // namespace lindode
