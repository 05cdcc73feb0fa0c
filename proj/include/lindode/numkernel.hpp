#pragma once

// Dense complex linear algebra kernel. Everything downstream (generators,
// propagators, encodings) is built on the primitives in this header.
//
// Conventions fixed here and relied on everywhere else:
//   * matrices are row-major;
//   * vec is row-major: vec(rho)[i*d + j] = rho(i, j), so
//     vec(A rho B) = (A (x) B^T) vec(rho).
//
// Matrix products have an OpenMP path used above a size threshold; the plain
// serial loops are kept in namespace reference and tests check the two paths
// agree near-bitwise.

#include <complex>
#include <cstddef>
#include <vector>

namespace lindode {

using cplx = std::complex<double>;
using ComplexVector = std::vector<cplx>;

class ComplexMatrix {
public:
    ComplexMatrix() : rows_(0), cols_(0) {}
    ComplexMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols) {}
    ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> data);

    static ComplexMatrix identity(std::size_t n);
    static ComplexMatrix zero(std::size_t rows, std::size_t cols);
    /// Build from nested initializer-style rows (convenience for tests/fixtures).
    static ComplexMatrix from_rows(const std::vector<std::vector<cplx>>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool is_square() const { return rows_ == cols_; }

    cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<cplx>& data() const { return data_; }
    std::vector<cplx>& data() { return data_; }

    ComplexMatrix& operator+=(const ComplexMatrix& rhs);
    ComplexMatrix& operator-=(const ComplexMatrix& rhs);
    ComplexMatrix& operator*=(cplx s);

    ComplexMatrix adjoint() const;
    ComplexMatrix transpose() const;
    ComplexMatrix conj() const;
    cplx trace() const;

    /// Largest |entry|; cheap scale estimate used by iteration controls.
    double max_abs() const;
    /// True if every entry is finite.
    bool all_finite() const;

    /// Copy the block with upper-left corner (r0, c0) and shape (h, w).
    ComplexMatrix block(std::size_t r0, std::size_t c0, std::size_t h, std::size_t w) const;
    /// Overwrite the block at (r0, c0) with the contents of src.
    void set_block(std::size_t r0, std::size_t c0, const ComplexMatrix& src);

private:
    std::size_t rows_, cols_;
    std::vector<cplx> data_;
};

ComplexMatrix operator+(ComplexMatrix lhs, const ComplexMatrix& rhs);
ComplexMatrix operator-(ComplexMatrix lhs, const ComplexMatrix& rhs);
ComplexMatrix operator*(cplx s, ComplexMatrix m);
ComplexMatrix operator*(ComplexMatrix m, cplx s);
/// Matrix product; dispatches to the OpenMP kernel above a size threshold.
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
/// Matrix-vector product with the same dispatch rule.
ComplexVector operator*(const ComplexMatrix& a, const ComplexVector& x);

namespace reference {
/// Plain serial triple loop, kept as the ground truth the parallel kernel is
/// tested against. Accumulation order over the inner index matches the
/// parallel kernel so the two agree bit-for-bit up to compiler FMA choices.
ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexVector matvec(const ComplexMatrix& a, const ComplexVector& x);
} // namespace reference

/// OpenMP-parallel product (rows distributed across threads).
ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexVector matvec(const ComplexMatrix& a, const ComplexVector& x);

// ---- vectors -------------------------------------------------------------

double vnorm(const ComplexVector& v);
/// Inner product, conjugate-linear in the first argument.
cplx vdot(const ComplexVector& a, const ComplexVector& b);
ComplexVector vadd(const ComplexVector& a, const ComplexVector& b);
ComplexVector vsub(const ComplexVector& a, const ComplexVector& b);
ComplexVector vscale(cplx s, const ComplexVector& v);
/// |a><b| as a matrix.
ComplexMatrix outer(const ComplexVector& a, const ComplexVector& b);

// ---- vec / unvec / kron ----------------------------------------------------

/// Row-major vec: out[i*d + j] = m(i, j).
ComplexVector vec_mat(const ComplexMatrix& m);
/// Inverse of vec_mat for square matrices (v.size() must be a perfect square).
ComplexMatrix unvec(const ComplexVector& v);
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

// ---- matrix exponential ----------------------------------------------------

/// exp(M) by scaling-and-squaring with a degree-13 Pade core. Relative
/// accuracy ~1e-13 for ||M|| up to a few tens.
ComplexMatrix expm(const ComplexMatrix& m);

/// exp(M) v without forming exp(M): scaled truncated Taylor applied to the
/// vector. Matches expm(M)*v to ~1e-13 relative and costs only mat-vecs.
ComplexVector expm_multiply(const ComplexMatrix& m, const ComplexVector& v);

// ---- Hermitian eigendecomposition ------------------------------------------

struct HermitianEig {
    std::vector<double> eigenvalues;  ///< ascending
    ComplexMatrix eigenvectors;       ///< columns, unitary
};

/// Cyclic complex Jacobi. Input must be Hermitian within 1e-10 of its scale;
/// rotations run until every off-diagonal entry is below 1e-14 * scale.
HermitianEig herm_eig(const ComplexMatrix& m);

/// Principal square root of a positive semidefinite matrix. Eigenvalues in
/// [-1e-8, 0) are treated as rounding noise and clipped to zero; anything
/// below -1e-8 is rejected as a genuinely non-PSD input.
ComplexMatrix psd_sqrt(const ComplexMatrix& m);

// ---- norms -------------------------------------------------------------------

struct MatrixNorms {
    double spectral;
    double trace;
    double frobenius;
};

/// Singular values (descending), computed from the Hermitian embedding
/// [[0, M], [M^H, 0]] so absolute accuracy stays ~1e-15 even for singular
/// values near zero.
std::vector<double> singular_values(const ComplexMatrix& m);
MatrixNorms norms(const ComplexMatrix& m);
double spectral_norm(const ComplexMatrix& m);
double trace_norm(const ComplexMatrix& m);
double frobenius_norm(const ComplexMatrix& m);

// ---- channels: Choi and Kraus ----------------------------------------------

struct KrausSet {
    std::vector<ComplexMatrix> operators;
    std::size_t dim = 0;
    /// max |(sum_k K_k^H K_k) - I| entry; stored at construction for reporting.
    double trace_preservation_defect = 0.0;
};

/// Reshuffle a superoperator (acting on row-major vec) into its Choi matrix:
/// C[(m*d + i), (n*d + j)] = Phi[(m*d + n), (i*d + j)], so C = sum_k vec(K_k) vec(K_k)^H.
ComplexMatrix choi_matrix(const ComplexMatrix& superop);

/// Kraus operators of a completely positive trace-preserving superoperator.
/// Choi eigenvalues below 1e-12 * lambda_max are dropped; negative eigenvalues
/// beyond -1e-9 * lambda_max are rejected (channel not CP).
KrausSet choi_kraus(const ComplexMatrix& superop);

} // namespace lindode
