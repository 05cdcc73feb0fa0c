#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lindode/errors.hpp"
#include "lindode/odecore.hpp"
#include "testutil.hpp"

#include <cmath>

using namespace lindode;

namespace {
const cplx I(0.0, 1.0);

ComplexMatrix pauli_x() { return ComplexMatrix::from_rows({{0.0, 1.0}, {1.0, 0.0}}); }
ComplexMatrix pauli_z() { return ComplexMatrix::from_rows({{1.0, 0.0}, {0.0, -1.0}}); }

ComplexMatrix column(const ComplexVector& v) {
    ComplexMatrix m(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
    return m;
}
} // namespace

TEST_CASE("TimeDependentMatrix: knot interpolation, clamping, validation") {
    ComplexMatrix z = pauli_z();
    ComplexMatrix z2 = z;
    z2 *= cplx(2.0);
    auto td = TimeDependentMatrix::knots({0.0, 2.0}, {ComplexMatrix::zero(2, 2), z2});

    CHECK(testutil::max_abs_diff(td.eval(1.0), z) <= 1e-15);   // midpoint
    CHECK(td.eval(-1.0).max_abs() == 0.0);                     // clamped low
    CHECK(testutil::max_abs_diff(td.eval(5.0), z2) == 0.0);    // clamped high
    CHECK(td.knot_rate_bound() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

    CHECK_THROWS_AS(TimeDependentMatrix::knots({0.0, 0.0}, {z, z}), input_error);
    CHECK_THROWS_AS(TimeDependentMatrix::knots({0.0}, {z}), input_error);

    // map keeps knot structure and applies the transform to each knot.
    auto doubled = td.map("doubled", [](const ComplexMatrix& m) {
        ComplexMatrix out = m;
        out *= cplx(2.0);
        return out;
    });
    CHECK(testutil::max_abs_diff(doubled.eval(1.0), z2) <= 1e-15);
}

TEST_CASE("hermitian_split: frozen examples and reconstruction") {
    // V = iX is anti-Hermitian: A = X, B = 0.
    ComplexMatrix v = pauli_x();
    v *= I;
    HermitianSplit s = hermitian_split(v);
    CHECK(testutil::max_abs_diff(s.A, pauli_x()) <= 1e-15);
    CHECK(s.B.max_abs() <= 1e-15);

    // Hermitian V: A = 0, B = V.
    ComplexMatrix d = ComplexMatrix::from_rows({{1.0, 0.0}, {0.0, 2.0}});
    s = hermitian_split(d);
    CHECK(s.A.max_abs() <= 1e-15);
    CHECK(testutil::max_abs_diff(s.B, d) <= 1e-15);

    std::mt19937_64 rng(101);
    ComplexMatrix r = testutil::random_matrix(4, 4, rng);
    s = hermitian_split(r);
    CHECK(testutil::max_abs_diff(s.A, s.A.adjoint()) <= 1e-13);
    CHECK(testutil::max_abs_diff(s.B, s.B.adjoint()) <= 1e-13);
    ComplexMatrix rebuilt = s.B;
    ComplexMatrix ia = s.A;
    ia *= I;
    rebuilt += ia;
    CHECK(testutil::max_abs_diff(rebuilt, r) <= 1e-13);
}

TEST_CASE("check_semi_dissipative: verdicts and witness") {
    auto ok1 = check_semi_dissipative(
        TimeDependentMatrix::constant(ComplexMatrix::from_rows({{1.0, 0.0}, {0.0, 2.0}})), 1.0);
    CHECK(ok1.ok);

    ComplexMatrix ix = pauli_x();
    ix *= I;
    CHECK(check_semi_dissipative(TimeDependentMatrix::constant(ix), 1.0).ok);  // B = 0 allowed

    auto bad = check_semi_dissipative(
        TimeDependentMatrix::constant(ComplexMatrix::from_rows({{-0.1, 0.0}, {0.0, 1.0}})), 1.0);
    CHECK_FALSE(bad.ok);
    CHECK(bad.worst_eigenvalue == doctest::Approx(-0.1).epsilon(1e-12));

    // Knot ramp that dips negative only at the end: witness sits at t = 2.
    ComplexMatrix pos = ComplexMatrix::identity(2);
    ComplexMatrix neg = ComplexMatrix::identity(2);
    neg *= cplx(-0.5);
    auto ramp = check_semi_dissipative(TimeDependentMatrix::knots({0.0, 2.0}, {pos, neg}), 2.0);
    CHECK_FALSE(ramp.ok);
    CHECK(ramp.worst_t == doctest::Approx(2.0));
    CHECK(ramp.worst_eigenvalue == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("spectral_gap: frozen values and error cases") {
    ComplexMatrix b(4, 4);
    b(0, 0) = 0.0;
    b(1, 1) = 0.5;
    b(2, 2) = 2.0;
    b(3, 3) = 1.0;
    CHECK(spectral_gap(b) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(spectral_gap(ComplexMatrix::identity(3)) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK_THROWS_AS(spectral_gap(ComplexMatrix::zero(2, 2)), input_error);

    std::mt19937_64 rng(202);
    ComplexMatrix spread = testutil::hermitian_with_spectrum({0.0, 0.25, 1.0}, rng);
    CHECK(spectral_gap(spread) == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("OdeProblem: validation") {
    auto v = TimeDependentMatrix::constant(ComplexMatrix::identity(2));
    CHECK_THROWS_AS(OdeProblem::make(v, ComplexVector{1.0, 1.0}, 1.0), input_error);  // not unit
    CHECK_THROWS_AS(OdeProblem::make(v, ComplexVector{1.0, 0.0}, -1.0), input_error);
    CHECK_NOTHROW(OdeProblem::make(v, ComplexVector{1.0, 0.0}, 0.0));
}

TEST_CASE("reference_solve: closed forms") {
    // V = 0: state unchanged.
    auto zero = OdeProblem::make(TimeDependentMatrix::constant(ComplexMatrix::zero(2, 2)),
                                 ComplexVector{1.0, 0.0}, 3.0);
    CHECK(testutil::max_abs_diff(reference_solve(zero).final_state(),
                                 ComplexVector{1.0, 0.0}) <= 1e-12);

    // Diagonal decay: mu(1) = (e^-1, e^-2)/sqrt(2).
    const double r2 = std::sqrt(0.5);
    auto diag = OdeProblem::make(
        TimeDependentMatrix::constant(ComplexMatrix::from_rows({{1.0, 0.0}, {0.0, 2.0}})),
        ComplexVector{r2, r2}, 1.0);
    ComplexVector want{r2 * std::exp(-1.0), r2 * std::exp(-2.0)};
    CHECK(testutil::max_abs_diff(reference_solve(diag).final_state(), want) <= 1e-9);

    // V = iX for T = pi/2 rotates (1,0) to (0,-i).
    ComplexMatrix ix = pauli_x();
    ix *= I;
    auto rot = OdeProblem::make(TimeDependentMatrix::constant(ix), ComplexVector{1.0, 0.0},
                                std::acos(-1.0) / 2.0);
    ComplexVector final_rot = reference_solve(rot).final_state();
    CHECK(std::abs(final_rot[0]) <= 1e-9);
    CHECK(std::abs(final_rot[1] - (-I)) <= 1e-9);
    CHECK(std::abs(vnorm(final_rot) - 1.0) <= 1e-10);  // anti-Hermitian conserves norm

    // Commuting time-dependent family V(t) = t Z via exact linear knots:
    // mu(2) = exp(-int_0^2 t dt Z) mu0 = exp(-2 Z) mu0.
    ComplexMatrix z2 = pauli_z();
    z2 *= cplx(2.0);
    auto vt = TimeDependentMatrix::knots({0.0, 2.0}, {ComplexMatrix::zero(2, 2), z2});
    auto tdp = OdeProblem::make(vt, ComplexVector{r2, r2}, 2.0);
    ComplexVector ftd = reference_solve(tdp).final_state();
    CHECK(std::abs(ftd[0] - r2 * std::exp(-2.0)) <= 1e-9);
    CHECK(std::abs(ftd[1] - r2 * std::exp(2.0)) <= 2e-8);
}

TEST_CASE("reference_solve: inhomogeneous closed form") {
    // V = I, b = (1,0), mu0 = (0,1): mu(1) = (1 - e^-1, e^-1).
    auto b = TimeDependentMatrix::constant(column({1.0, 0.0}));
    auto p = OdeProblem::make(TimeDependentMatrix::constant(ComplexMatrix::identity(2)),
                              ComplexVector{0.0, 1.0}, 1.0, b);
    ComplexVector f = reference_solve(p).final_state();
    CHECK(std::abs(f[0] - (1.0 - std::exp(-1.0))) <= 1e-9);
    CHECK(std::abs(f[1] - std::exp(-1.0)) <= 1e-9);
}

TEST_CASE("reference_solve: semi-dissipative norm is non-increasing") {
    std::mt19937_64 rng(303);
    ComplexMatrix a = testutil::random_hermitian(4, rng);
    ComplexMatrix bpart = testutil::random_psd(4, rng);
    ComplexMatrix ia = a;
    ia *= I;
    ComplexMatrix v = bpart + ia;
    auto p = OdeProblem::make(TimeDependentMatrix::constant(v),
                              testutil::random_unit_vector(4, rng), 2.0);
    Trajectory traj = reference_solve(p);
    for (std::size_t k = 1; k < traj.states.size(); ++k)
        CHECK(vnorm(traj.states[k]) <= vnorm(traj.states[k - 1]) + 1e-10);
    CHECK(traj.times.front() == 0.0);
    CHECK(traj.times.back() == doctest::Approx(2.0));
}

TEST_CASE("duhamel_compose: homogeneous case reduces to the propagated state") {
    std::mt19937_64 rng(404);
    ComplexMatrix v = testutil::random_psd(3, rng);
    auto p = OdeProblem::make(TimeDependentMatrix::constant(v),
                              testutil::random_unit_vector(3, rng), 1.5);
    ComplexVector via_quad = duhamel_compose(p, 8);
    ComplexVector direct = reference_solve(p).final_state();
    CHECK(testutil::max_abs_diff(via_quad, direct) <= 1e-10);
}

TEST_CASE("duhamel_compose: accuracy and second-order convergence") {
    // Constant-coefficient closed form: V = I, b = (1,0), mu0 = (0,1).
    auto b = TimeDependentMatrix::constant(column({1.0, 0.0}));
    auto p = OdeProblem::make(TimeDependentMatrix::constant(ComplexMatrix::identity(2)),
                              ComplexVector{0.0, 1.0}, 1.0, b);
    const ComplexVector exact{cplx(1.0 - std::exp(-1.0)), cplx(std::exp(-1.0))};

    auto err = [&](std::size_t m) {
        return vnorm(vsub(duhamel_compose(p, m), exact));
    };
    CHECK(err(64) <= 1e-3);

    const double ratio = err(32) / err(16);
    CHECK(ratio >= 0.17);
    CHECK(ratio <= 0.37);
}

TEST_CASE("duhamel_compose: time-dependent source closed form") {
    // b(t) = (t, 0) via exact linear knots; V = I, mu0 = (0,1), T = 1:
    // mu(1) = (e^-1, e^-1) because int_0^1 e^{-(1-s)} s ds = e^-1.
    auto b = TimeDependentMatrix::knots({0.0, 1.0}, {column({0.0, 0.0}), column({1.0, 0.0})});
    auto p = OdeProblem::make(TimeDependentMatrix::constant(ComplexMatrix::identity(2)),
                              ComplexVector{0.0, 1.0}, 1.0, b);
    ComplexVector got = duhamel_compose(p, 256);
    CHECK(std::abs(got[0] - std::exp(-1.0)) <= 1e-5);
    CHECK(std::abs(got[1] - std::exp(-1.0)) <= 1e-9);
}

TEST_CASE("norm propagation: ||psi - phi|| <= ||(psi - phi) mu^H||_tr / ||mu||") {
    std::mt19937_64 rng(505);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t d = 2 + static_cast<std::size_t>(rep % 5);
        ComplexVector psi(d), phi(d), mu(d);
        for (std::size_t i = 0; i < d; ++i) {
            psi[i] = cplx(g(rng), g(rng));
            phi[i] = cplx(g(rng), g(rng));
            mu[i] = cplx(g(rng), g(rng));
        }
        const ComplexVector diff = vsub(psi, phi);
        const double lhs = vnorm(diff);
        const double rhs = trace_norm(outer(diff, mu)) / vnorm(mu);
        CHECK(lhs <= rhs * (1.0 + 1e-12) + 1e-13);
    }
}
