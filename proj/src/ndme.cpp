#include "lindode/ndme.hpp"
#include "lindode/errors.hpp"

#include <cmath>
#include <sstream>

namespace lindode {

namespace {

ComplexMatrix embed_block(const ComplexMatrix& m, bool lower) {
    const std::size_t d = m.rows();
    ComplexMatrix out(2 * d, 2 * d);
    out.set_block(lower ? d : 0, lower ? d : 0, m);
    return out;
}

TimeDependentMatrix embed_td(const TimeDependentMatrix& m, bool lower) {
    return m.map(lower ? "lower_block" : "upper_block",
                 [lower](const ComplexMatrix& x) { return embed_block(x, lower); });
}

} // namespace

LindbladSpec dilate(const TimeDependentMatrix& a, const std::vector<TimeDependentMatrix>& jumps) {
    std::vector<TimeDependentMatrix> dilated_jumps;
    dilated_jumps.reserve(jumps.size());
    for (const auto& g : jumps) dilated_jumps.push_back(embed_td(g, false));
    return LindbladSpec::make(embed_td(a, false), std::move(dilated_jumps));
}

DensityMatrix initial_state(const ComplexVector& mu0, const ComplexVector& phi0) {
    if (mu0.size() != phi0.size()) throw input_error("initial_state: dimension mismatch");
    if (std::abs(vnorm(mu0) - 1.0) > 1e-12 || std::abs(vnorm(phi0) - 1.0) > 1e-12)
        throw input_error("initial_state: vectors must be unit norm within 1e-12");
    const std::size_t d = mu0.size();
    ComplexVector psi(2 * d);
    const double r = 1.0 / std::sqrt(2.0);
    for (std::size_t i = 0; i < d; ++i) {
        psi[i] = r * mu0[i];
        psi[d + i] = r * phi0[i];
    }
    return DensityMatrix::pure(psi);
}

ComplexMatrix extract_block(const ComplexMatrix& rho, std::size_t s1, std::size_t s2) {
    if (!rho.is_square() || rho.rows() % 2 != 0)
        throw input_error("extract_block: state is not on ancilla (x) system");
    if (s1 > 1 || s2 > 1) throw input_error("extract_block: ancilla index out of range");
    const std::size_t d = rho.rows() / 2;
    return rho.block(s1 * d, s2 * d, d, d);
}

std::pair<TimeDependentMatrix, TimeDependentMatrix> encoding_operators(
    const TimeDependentMatrix& v) {
    auto split_a = [](const ComplexMatrix& m) { return hermitian_split(m).A; };
    auto sqrt_2b = [](const ComplexMatrix& m) {
        ComplexMatrix b2 = hermitian_split(m).B;
        b2 *= cplx(2.0);
        return psd_sqrt(b2);
    };
    TimeDependentMatrix a = v.map("drift", split_a);
    TimeDependentMatrix g =
        v.is_constant()
            ? TimeDependentMatrix::constant(sqrt_2b(v.constant_value()))
            : TimeDependentMatrix::generator(
                  "sqrt_2B", [v, sqrt_2b](double t) { return sqrt_2b(v.eval(t)); }, v.dim());
    return {std::move(a), std::move(g)};
}

DensityMatrix evolve_encoding(const TimeDependentMatrix& a,
                              const std::vector<TimeDependentMatrix>& jumps,
                              const ComplexVector& mu0, const ComplexVector& phi0,
                              double t0, double t1, std::size_t initial_steps) {
    const LindbladSpec spec = dilate(a, jumps);
    return propagate(spec, initial_state(mu0, phi0), t0, t1, initial_steps);
}

HomogeneousSolution solve_homogeneous(const OdeProblem& p, std::size_t initial_steps) {
    if (p.b) throw input_error("solve_homogeneous: problem has a source term");
    const DissipativityVerdict verdict = check_semi_dissipative(p.V, p.T);
    if (!verdict.ok) {
        std::ostringstream os;
        os << "solve_homogeneous: V is not semi-dissipative: min eig B(t) = "
           << verdict.worst_eigenvalue << " at t = " << verdict.worst_t;
        throw input_error(os.str());
    }

    auto [a, g] = encoding_operators(p.V);
    DensityMatrix rho_T = evolve_encoding(a, {g}, p.mu0, p.mu0, 0.0, p.T, initial_steps);

    const ComplexMatrix block = extract_block(rho_T.matrix(), 0, 1);
    ComplexVector w = matvec(block, p.mu0);
    for (auto& z : w) z *= 2.0;
    const double eta = vnorm(w);
    if (eta < 1e-8)
        throw input_error("solve_homogeneous: solution norm vanished; extraction ill-posed");

    HomogeneousSolution sol{vscale(cplx(1.0 / eta), w), eta, std::move(rho_T)};

    const ComplexVector mu_ref = reference_solve(p).final_state();
    const double defect = vnorm(vsub(w, mu_ref));
    if (defect > 1e-7) {
        std::ostringstream os;
        os << "solve_homogeneous: encoded solution deviates from the reference by " << defect
           << " (allowed 1e-7)";
        throw check_error(os.str());
    }
    return sol;
}

DensityMatrix second_stage(const DensityMatrix& rho_T, const TimeDependentMatrix& a,
                           const std::vector<TimeDependentMatrix>& jumps, double T,
                           std::size_t initial_steps) {
    std::vector<TimeDependentMatrix> lower_jumps;
    lower_jumps.reserve(jumps.size());
    for (const auto& g : jumps) lower_jumps.push_back(embed_td(g, true));
    const LindbladSpec spec = LindbladSpec::make(embed_td(a, true), std::move(lower_jumps));
    if (spec.dim != rho_T.dim())
        throw input_error("second_stage: state dimension does not match the operators");
    return propagate(spec, rho_T, 0.0, T, initial_steps);
}

InhomogeneousSolution inhomogeneous_solve(const OdeProblem& p, std::size_t m,
                                          std::size_t initial_steps) {
    if (!p.b) {
        HomogeneousSolution h = solve_homogeneous(p, initial_steps);
        return {std::move(h.mu_T), h.eta};
    }
    if (m == 0) throw input_error("inhomogeneous_solve: need at least one slice");
    const DissipativityVerdict verdict = check_semi_dissipative(p.V, p.T);
    if (!verdict.ok) {
        std::ostringstream os;
        os << "inhomogeneous_solve: V is not semi-dissipative: min eig B(t) = "
           << verdict.worst_eigenvalue << " at t = " << verdict.worst_t;
        throw input_error(os.str());
    }

    auto [a, g] = encoding_operators(p.V);
    const std::vector<TimeDependentMatrix> jumps{g};

    auto propagate_probe = [&](const ComplexVector& probe, double t0) {
        DensityMatrix rho = evolve_encoding(a, jumps, probe, probe, t0, p.T, initial_steps);
        ComplexVector w = matvec(extract_block(rho.matrix(), 0, 1), probe);
        for (auto& z : w) z *= 2.0;
        return w;
    };

    ComplexVector total = propagate_probe(p.mu0, 0.0);

    const double w_slice = p.T / static_cast<double>(m);
    std::vector<ComplexVector> slice_terms(m);
    const std::ptrdiff_t mm = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t j = 0; j < mm; ++j) {
        const double tj = (static_cast<double>(j) + 0.5) * w_slice;
        const ComplexMatrix bt = p.b->eval(tj);
        ComplexVector bj(p.dim);
        for (std::size_t i = 0; i < p.dim; ++i) bj[i] = bt(i, 0);
        const double nb = vnorm(bj);
        if (nb <= 1e-300) {
            slice_terms[static_cast<std::size_t>(j)] = ComplexVector(p.dim);
            continue;
        }
        const ComplexVector what = propagate_probe(vscale(cplx(1.0 / nb), bj), tj);
        slice_terms[static_cast<std::size_t>(j)] = vscale(cplx(w_slice * nb), what);
    }
    for (const auto& term : slice_terms)
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += term[i];

    const double eta = vnorm(total);
    if (eta < 1e-8)
        throw input_error("inhomogeneous_solve: solution norm vanished; extraction ill-posed");
    return {vscale(cplx(1.0 / eta), total), eta};
}

} // namespace lindode
