#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lindode/errors.hpp"
#include "lindode/numkernel.hpp"
#include "testutil.hpp"

#include <cmath>

using namespace lindode;
using testutil::max_abs_diff;

namespace {
const cplx I(0.0, 1.0);
}

TEST_CASE("matmul: parallel path agrees with the serial reference") {
    std::mt19937_64 rng(11);
    // 96x96 complex exceeds the dispatch threshold, so operator* takes the
    // OpenMP kernel; the reference loop must agree essentially bit-for-bit.
    ComplexMatrix a = testutil::random_matrix(96, 96, rng);
    ComplexMatrix b = testutil::random_matrix(96, 96, rng);
    ComplexMatrix fast = matmul(a, b);
    ComplexMatrix slow = reference::matmul(a, b);
    CHECK(max_abs_diff(fast, slow) <= 1e-13 * slow.max_abs());

    ComplexVector x = testutil::random_unit_vector(96, rng);
    CHECK(testutil::max_abs_diff(matvec(a, x), reference::matvec(a, x)) <= 1e-13);
}

TEST_CASE("matmul: shape mismatch rejected") {
    ComplexMatrix a(2, 3), b(2, 2);
    CHECK_THROWS_AS(matmul(a, b), input_error);
}

TEST_CASE("vec/unvec: row-major convention and inverse pair") {
    ComplexMatrix rho = ComplexMatrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
    ComplexVector v = vec_mat(rho);
    CHECK(v[0] == cplx(1.0));
    CHECK(v[1] == cplx(2.0));  // vec[i*d + j] = rho(i, j)
    CHECK(v[2] == cplx(3.0));
    CHECK(v[3] == cplx(4.0));
    CHECK(max_abs_diff(unvec(v), rho) == 0.0);
}

TEST_CASE("kron and the vec identity vec(A rho B) = (A kron B^T) vec(rho)") {
    ComplexMatrix x = ComplexMatrix::from_rows({{0.0, 1.0}, {1.0, 0.0}});
    ComplexMatrix z = ComplexMatrix::from_rows({{1.0, 0.0}, {0.0, -1.0}});
    ComplexMatrix zx = kron(z, x);
    CHECK(zx.rows() == 4);
    CHECK(zx(0, 1) == cplx(1.0));
    CHECK(zx(2, 3) == cplx(-1.0));
    CHECK(zx(0, 0) == cplx(0.0));

    std::mt19937_64 rng(22);
    for (int rep = 0; rep < 5; ++rep) {
        ComplexMatrix a = testutil::random_matrix(3, 3, rng);
        ComplexMatrix b = testutil::random_matrix(3, 3, rng);
        ComplexMatrix rho = testutil::random_matrix(3, 3, rng);
        ComplexVector lhs = vec_mat(a * rho * b);
        ComplexVector rhs = kron(a, b.transpose()) * vec_mat(rho);
        CHECK(testutil::max_abs_diff(lhs, rhs) <= 1e-12);
    }
}

TEST_CASE("expm: closed forms") {
    // exp(0) = I
    CHECK(max_abs_diff(expm(ComplexMatrix::zero(3, 3)), ComplexMatrix::identity(3)) == 0.0);

    // Planar rotation generator.
    const double th = 0.7;
    ComplexMatrix g = ComplexMatrix::from_rows({{0.0, th}, {-th, 0.0}});
    ComplexMatrix want = ComplexMatrix::from_rows(
        {{std::cos(th), std::sin(th)}, {-std::sin(th), std::cos(th)}});
    CHECK(max_abs_diff(expm(g), want) <= 1e-14);

    // Diagonal with a complex entry.
    ComplexMatrix d = ComplexMatrix::from_rows({{1.0, 0.0}, {0.0, 2.0 * I}});
    ComplexMatrix ed = expm(d);
    CHECK(std::abs(ed(0, 0) - std::exp(1.0)) <= 1e-13);
    CHECK(std::abs(ed(1, 1) - std::exp(2.0 * I)) <= 1e-13);
    CHECK(std::abs(ed(0, 1)) == 0.0);
}

TEST_CASE("expm: inverse and large-norm accuracy") {
    std::mt19937_64 rng(33);
    ComplexMatrix a = testutil::random_matrix(8, 8, rng);
    ComplexMatrix prod = expm(a) * expm(cplx(-1.0) * a);
    CHECK(max_abs_diff(prod, ComplexMatrix::identity(8)) <= 1e-11);

    // Norm ~40 diagonalizable case against the scalar closed form.
    ComplexMatrix h = testutil::random_hermitian(6, rng);
    HermitianEig eig = herm_eig(h);
    ComplexMatrix scaled = h;
    const double target = 40.0 / std::abs(eig.eigenvalues.back());
    scaled *= cplx(target);
    ComplexMatrix e = expm(cplx(-I) * scaled);
    // exp of -i * Hermitian is unitary; check unitarity as the accuracy proxy.
    CHECK(max_abs_diff(e * e.adjoint(), ComplexMatrix::identity(6)) <= 1e-11);
}

TEST_CASE("expm_multiply matches expm applied to a vector") {
    std::mt19937_64 rng(44);
    ComplexMatrix a = testutil::random_matrix(24, 24, rng);
    ComplexVector v = testutil::random_unit_vector(24, rng);
    ComplexVector fast = expm_multiply(a, v);
    ComplexVector direct = expm(a) * v;
    CHECK(testutil::max_abs_diff(fast, direct) <= 1e-11 * vnorm(direct));
}

TEST_CASE("herm_eig: frozen small spectra") {
    ComplexMatrix m = ComplexMatrix::from_rows({{2.0, 1.0}, {1.0, 2.0}});
    HermitianEig eig = herm_eig(m);
    CHECK(eig.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(eig.eigenvalues[1] == doctest::Approx(3.0).epsilon(1e-13));

    ComplexMatrix x = ComplexMatrix::from_rows({{0.0, 1.0}, {1.0, 0.0}});
    eig = herm_eig(x);
    CHECK(eig.eigenvalues[0] == doctest::Approx(-1.0).epsilon(1e-13));
    CHECK(eig.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-13));

    // Complex off-diagonal: [[1, i],[-i, 1]] has spectrum {0, 2}.
    ComplexMatrix y = ComplexMatrix::from_rows({{1.0, I}, {-I, 1.0}});
    eig = herm_eig(y);
    CHECK(std::abs(eig.eigenvalues[0]) <= 1e-14);
    CHECK(eig.eigenvalues[1] == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("herm_eig: reconstruction and unitarity on random input") {
    std::mt19937_64 rng(55);
    for (std::size_t n : {4u, 9u, 16u}) {
        ComplexMatrix h = testutil::random_hermitian(n, rng);
        HermitianEig eig = herm_eig(h);
        ComplexMatrix lam(n, n);
        for (std::size_t i = 0; i < n; ++i) lam(i, i) = eig.eigenvalues[i];
        ComplexMatrix rebuilt = eig.eigenvectors * lam * eig.eigenvectors.adjoint();
        CHECK(max_abs_diff(rebuilt, h) <= 1e-12 * std::max(1.0, h.max_abs()));
        CHECK(max_abs_diff(eig.eigenvectors.adjoint() * eig.eigenvectors,
                           ComplexMatrix::identity(n)) <= 1e-12);
        CHECK(std::is_sorted(eig.eigenvalues.begin(), eig.eigenvalues.end()));
    }
}

TEST_CASE("herm_eig: non-Hermitian input rejected") {
    ComplexMatrix m = ComplexMatrix::from_rows({{1.0, 1.0}, {0.0, 1.0}});
    CHECK_THROWS_AS(herm_eig(m), input_error);
}

TEST_CASE("psd_sqrt: closed forms and properties") {
    ComplexMatrix d = ComplexMatrix::from_rows({{4.0, 0.0}, {0.0, 9.0}});
    ComplexMatrix r = psd_sqrt(d);
    CHECK(std::abs(r(0, 0) - 2.0) <= 1e-13);
    CHECK(std::abs(r(1, 1) - 3.0) <= 1e-13);

    // [[2,1],[1,2]] has sqrt [[(s3+1)/2, (s3-1)/2], ...] with s3 = sqrt(3).
    const double s3 = std::sqrt(3.0);
    ComplexMatrix m = ComplexMatrix::from_rows({{2.0, 1.0}, {1.0, 2.0}});
    ComplexMatrix want = ComplexMatrix::from_rows(
        {{(s3 + 1.0) / 2.0, (s3 - 1.0) / 2.0}, {(s3 - 1.0) / 2.0, (s3 + 1.0) / 2.0}});
    CHECK(max_abs_diff(psd_sqrt(m), want) <= 1e-13);

    std::mt19937_64 rng(66);
    ComplexMatrix p = testutil::random_psd(6, rng);
    ComplexMatrix root = psd_sqrt(p);
    CHECK(max_abs_diff(root * root, p) <= 1e-12 * std::max(1.0, p.max_abs()));
    CHECK(max_abs_diff(root, root.adjoint()) <= 1e-12);

    // Tiny negative eigenvalues are clipped, genuinely negative ones rejected.
    ComplexMatrix noisy = ComplexMatrix::from_rows({{1.0, 0.0}, {0.0, -1e-9}});
    ComplexMatrix clipped = psd_sqrt(noisy);
    CHECK(std::abs(clipped(1, 1)) == 0.0);
    ComplexMatrix bad = ComplexMatrix::from_rows({{1.0, 0.0}, {0.0, -1e-3}});
    CHECK_THROWS_AS(psd_sqrt(bad), input_error);
}

TEST_CASE("norms: frozen values and ordering") {
    // Nilpotent |0><1|: all three norms equal 1.
    ComplexMatrix n01 = ComplexMatrix::from_rows({{0.0, 1.0}, {0.0, 0.0}});
    MatrixNorms nm = norms(n01);
    CHECK(nm.spectral == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(nm.trace == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(nm.frobenius == doctest::Approx(1.0).epsilon(1e-13));

    ComplexMatrix d = ComplexMatrix::from_rows({{3.0, 0.0}, {0.0, -4.0}});
    nm = norms(d);
    CHECK(nm.spectral == doctest::Approx(4.0).epsilon(1e-13));
    CHECK(nm.trace == doctest::Approx(7.0).epsilon(1e-13));
    CHECK(nm.frobenius == doctest::Approx(5.0).epsilon(1e-13));

    std::mt19937_64 rng(77);
    ComplexMatrix a = testutil::random_matrix(5, 5, rng);
    nm = norms(a);
    CHECK(nm.spectral <= nm.frobenius + 1e-13);
    CHECK(nm.frobenius <= nm.trace + 1e-13);

    // Near-zero matrix: trace norm must stay near-zero (no sqrt-of-noise bias).
    ComplexMatrix tiny = testutil::random_matrix(8, 8, rng, 1e-12);
    CHECK(trace_norm(tiny) <= 1e-10);
}

TEST_CASE("choi_kraus: identity channel") {
    const std::size_t d = 3;
    ComplexMatrix id_chan = ComplexMatrix::identity(d * d);
    KrausSet ks = choi_kraus(id_chan);
    REQUIRE(ks.operators.size() == 1);
    // Single Kraus operator equal to the identity up to a global phase.
    ComplexMatrix k = ks.operators[0];
    cplx phase = k(0, 0);
    CHECK(std::abs(std::abs(phase) - 1.0) <= 1e-12);
    k *= std::conj(phase);
    CHECK(max_abs_diff(k, ComplexMatrix::identity(d)) <= 1e-12);
    CHECK(ks.trace_preservation_defect <= 1e-12);
}

TEST_CASE("choi_kraus: amplitude damping closed form") {
    // Channel rho -> K0 rho K0^H + K1 rho K1^H with K0 = diag(1, sqrt(1-p)),
    // K1 = sqrt(p) |0><1|, at p = 1/2. Superoperator = sum_k K (x) K*.
    const double p = 0.5;
    ComplexMatrix k0 = ComplexMatrix::from_rows({{1.0, 0.0}, {0.0, std::sqrt(1.0 - p)}});
    ComplexMatrix k1 = ComplexMatrix::from_rows({{0.0, std::sqrt(p)}, {0.0, 0.0}});
    ComplexMatrix superop = kron(k0, k0.conj()) + kron(k1, k1.conj());

    HermitianEig spec = herm_eig(choi_matrix(superop));
    CHECK(spec.eigenvalues[3] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(spec.eigenvalues[2] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(spec.eigenvalues[1]) <= 1e-12);
    CHECK(std::abs(spec.eigenvalues[0]) <= 1e-12);

    KrausSet ks = choi_kraus(superop);
    CHECK(ks.operators.size() == 2);
    CHECK(ks.trace_preservation_defect <= 1e-12);
}

TEST_CASE("choi_kraus: random channel reconstructs its superoperator") {
    std::mt19937_64 rng(88);
    const std::size_t d = 4;
    // Random Kraus set, normalized to trace preservation via S^{-1/2}.
    std::vector<ComplexMatrix> raw;
    ComplexMatrix s(d, d);
    for (int k = 0; k < 3; ++k) {
        raw.push_back(testutil::random_matrix(d, d, rng));
        s += raw.back().adjoint() * raw.back();
    }
    HermitianEig es = herm_eig(s);
    ComplexMatrix inv_root(d, d);
    for (std::size_t k = 0; k < d; ++k) {
        const double f = 1.0 / std::sqrt(es.eigenvalues[k]);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                inv_root(i, j) += f * es.eigenvectors(i, k) * std::conj(es.eigenvectors(j, k));
    }
    ComplexMatrix superop(d * d, d * d);
    for (auto& kop : raw) {
        kop = kop * inv_root;
        superop += kron(kop, kop.conj());
    }

    KrausSet ks = choi_kraus(superop);
    ComplexMatrix rebuilt(d * d, d * d);
    for (const auto& kop : ks.operators) rebuilt += kron(kop, kop.conj());
    CHECK(max_abs_diff(rebuilt, superop) <= 1e-9);
    CHECK(ks.trace_preservation_defect <= 1e-9);
}

TEST_CASE("choi_kraus: non-CP map rejected") {
    // Transpose map is positive but not completely positive.
    const std::size_t d = 2;
    ComplexMatrix transpose_map(d * d, d * d);
    // vec(rho^T)[i*d+j] = rho(j,i) = vec(rho)[j*d+i]
    transpose_map(0, 0) = 1.0;
    transpose_map(1, 2) = 1.0;
    transpose_map(2, 1) = 1.0;
    transpose_map(3, 3) = 1.0;
    CHECK_THROWS_AS(choi_kraus(transpose_map), input_error);
}
