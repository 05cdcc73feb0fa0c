#include "lindode/numkernel.hpp"
#include "lindode/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace lindode {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw input_error(msg);
}

void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        std::ostringstream os;
        os << op << ": shape mismatch (" << a.rows() << "x" << a.cols()
           << " vs " << b.rows() << "x" << b.cols() << ")";
        throw input_error(os.str());
    }
}

// Work threshold (multiply-adds) above which the OpenMP path is used.
constexpr std::size_t kParallelFlops = 1u << 18;

} // namespace

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    require(data_.size() == rows * cols, "ComplexMatrix: data size does not match shape");
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::zero(std::size_t rows, std::size_t cols) {
    return ComplexMatrix(rows, cols);
}

ComplexMatrix ComplexMatrix::from_rows(const std::vector<std::vector<cplx>>& rows) {
    require(!rows.empty(), "from_rows: empty matrix");
    ComplexMatrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i].size() == rows[0].size(), "from_rows: ragged rows");
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& rhs) {
    require_same_shape(*this, rhs, "operator+=");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += rhs.data_[k];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& rhs) {
    require_same_shape(*this, rhs, "operator-=");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= rhs.data_[k];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cplx s) {
    for (auto& v : data_) v *= s;
    return *this;
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix m(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) m(j, i) = std::conj((*this)(i, j));
    return m;
}

ComplexMatrix ComplexMatrix::transpose() const {
    ComplexMatrix m(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) m(j, i) = (*this)(i, j);
    return m;
}

ComplexMatrix ComplexMatrix::conj() const {
    ComplexMatrix m(rows_, cols_);
    for (std::size_t k = 0; k < data_.size(); ++k) m.data_[k] = std::conj(data_[k]);
    return m;
}

cplx ComplexMatrix::trace() const {
    require(is_square(), "trace: matrix not square");
    cplx t = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
    return t;
}

double ComplexMatrix::max_abs() const {
    double m = 0.0;
    for (const auto& v : data_) m = std::max(m, std::abs(v));
    return m;
}

bool ComplexMatrix::all_finite() const {
    for (const auto& v : data_)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

ComplexMatrix ComplexMatrix::block(std::size_t r0, std::size_t c0, std::size_t h, std::size_t w) const {
    require(r0 + h <= rows_ && c0 + w <= cols_, "block: out of range");
    ComplexMatrix m(h, w);
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) m(i, j) = (*this)(r0 + i, c0 + j);
    return m;
}

void ComplexMatrix::set_block(std::size_t r0, std::size_t c0, const ComplexMatrix& src) {
    require(r0 + src.rows() <= rows_ && c0 + src.cols() <= cols_, "set_block: out of range");
    for (std::size_t i = 0; i < src.rows(); ++i)
        for (std::size_t j = 0; j < src.cols(); ++j) (*this)(r0 + i, c0 + j) = src(i, j);
}

ComplexMatrix operator+(ComplexMatrix lhs, const ComplexMatrix& rhs) { return lhs += rhs; }
ComplexMatrix operator-(ComplexMatrix lhs, const ComplexMatrix& rhs) { return lhs -= rhs; }
ComplexMatrix operator*(cplx s, ComplexMatrix m) { return m *= s; }
ComplexMatrix operator*(ComplexMatrix m, cplx s) { return m *= s; }

namespace reference {

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) throw input_error("matmul: inner dimensions differ");
    ComplexMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cplx aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

ComplexVector matvec(const ComplexMatrix& a, const ComplexVector& x) {
    if (a.cols() != x.size()) throw input_error("matvec: dimension mismatch");
    ComplexVector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        cplx acc = 0.0;
        for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * x[k];
        y[i] = acc;
    }
    return y;
}

} // namespace reference

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) throw input_error("matmul: inner dimensions differ");
    const std::size_t flops = a.rows() * a.cols() * b.cols();
    if (flops < kParallelFlops) return reference::matmul(a, b);
    ComplexMatrix c(a.rows(), b.cols());
    const std::ptrdiff_t nr = static_cast<std::ptrdiff_t>(a.rows());
    // Row-parallel (i, k, j) kernel; per-entry accumulation order over k is the
    // same as the serial reference, so results match it bit-for-bit.
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < nr; ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cplx aik = a(static_cast<std::size_t>(i), k);
            for (std::size_t j = 0; j < b.cols(); ++j)
                c(static_cast<std::size_t>(i), j) += aik * b(k, j);
        }
    }
    return c;
}

ComplexVector matvec(const ComplexMatrix& a, const ComplexVector& x) {
    if (a.cols() != x.size()) throw input_error("matvec: dimension mismatch");
    const std::size_t flops = a.rows() * a.cols();
    if (flops < kParallelFlops) return reference::matvec(a, x);
    ComplexVector y(a.rows());
    const std::ptrdiff_t nr = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < nr; ++i) {
        cplx acc = 0.0;
        for (std::size_t k = 0; k < a.cols(); ++k) acc += a(static_cast<std::size_t>(i), k) * x[k];
        y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) { return matmul(a, b); }
ComplexVector operator*(const ComplexMatrix& a, const ComplexVector& x) { return matvec(a, x); }

// ---- vectors ----------------------------------------------------------------

double vnorm(const ComplexVector& v) {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    return std::sqrt(s);
}

cplx vdot(const ComplexVector& a, const ComplexVector& b) {
    require(a.size() == b.size(), "vdot: dimension mismatch");
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

ComplexVector vadd(const ComplexVector& a, const ComplexVector& b) {
    require(a.size() == b.size(), "vadd: dimension mismatch");
    ComplexVector c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}

ComplexVector vsub(const ComplexVector& a, const ComplexVector& b) {
    require(a.size() == b.size(), "vsub: dimension mismatch");
    ComplexVector c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
    return c;
}

ComplexVector vscale(cplx s, const ComplexVector& v) {
    ComplexVector c(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) c[i] = s * v[i];
    return c;
}

ComplexMatrix outer(const ComplexVector& a, const ComplexVector& b) {
    ComplexMatrix m(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * std::conj(b[j]);
    return m;
}

// ---- vec / unvec / kron -------------------------------------------------------

ComplexVector vec_mat(const ComplexMatrix& m) {
    require(m.is_square(), "vec_mat: matrix not square");
    return m.data();
}

ComplexMatrix unvec(const ComplexVector& v) {
    const auto d = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    require(d * d == v.size(), "unvec: length is not a perfect square");
    return ComplexMatrix(d, d, v);
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix m(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const cplx aij = a(i, j);
            if (aij == cplx(0.0)) continue;
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    m(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
        }
    return m;
}

// ---- matrix exponential --------------------------------------------------------

namespace {

double norm_1(const ComplexMatrix& m) {
    double best = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i) col += std::abs(m(i, j));
        best = std::max(best, col);
    }
    return best;
}

/// Solve A X = B by Gaussian elimination with partial pivoting (A square).
ComplexMatrix lu_solve(ComplexMatrix a, ComplexMatrix b) {
    const std::size_t n = a.rows();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(a(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(a(r, col));
            if (v > best) { best = v; piv = r; }
        }
        if (best == 0.0) throw check_error("lu_solve: singular system");
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
            for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(col, j), b(piv, j));
        }
        const cplx d = a(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            const cplx f = a(r, col) / d;
            if (f == cplx(0.0)) continue;
            for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            for (std::size_t j = 0; j < b.cols(); ++j) b(r, j) -= f * b(col, j);
        }
    }
    for (std::size_t col = n; col-- > 0;) {
        const cplx d = a(col, col);
        for (std::size_t j = 0; j < b.cols(); ++j) b(col, j) /= d;
        for (std::size_t r = 0; r < col; ++r) {
            const cplx f = a(r, col);
            if (f == cplx(0.0)) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) b(r, j) -= f * b(col, j);
        }
    }
    return b;
}

} // namespace

ComplexMatrix expm(const ComplexMatrix& m) {
    require(m.is_square(), "expm: matrix not square");
    require(m.all_finite(), "expm: non-finite entries");
    const std::size_t n = m.rows();
    if (n == 0) return m;

    // Degree-13 Pade numerator/denominator coefficients.
    static const double b[] = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0,
        670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
        960960.0, 16380.0, 182.0, 1.0};
    const double theta13 = 5.371920351148152;

    int squarings = 0;
    const double nrm = norm_1(m);
    if (nrm > theta13)
        squarings = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
    ComplexMatrix a = m;
    if (squarings > 0) a *= cplx(std::ldexp(1.0, -squarings));

    const ComplexMatrix id = ComplexMatrix::identity(n);
    const ComplexMatrix a2 = a * a;
    const ComplexMatrix a4 = a2 * a2;
    const ComplexMatrix a6 = a2 * a4;

    ComplexMatrix u_inner = cplx(b[13]) * a6 + cplx(b[11]) * a4 + cplx(b[9]) * a2;
    ComplexMatrix u = a * (a6 * u_inner + cplx(b[7]) * a6 + cplx(b[5]) * a4 + cplx(b[3]) * a2 + cplx(b[1]) * id);
    ComplexMatrix v_inner = cplx(b[12]) * a6 + cplx(b[10]) * a4 + cplx(b[8]) * a2;
    ComplexMatrix v = a6 * v_inner + cplx(b[6]) * a6 + cplx(b[4]) * a4 + cplx(b[2]) * a2 + cplx(b[0]) * id;

    ComplexMatrix r = lu_solve(v - u, v + u);
    for (int s = 0; s < squarings; ++s) r = r * r;
    return r;
}

ComplexVector expm_multiply(const ComplexMatrix& m, const ComplexVector& v) {
    require(m.is_square(), "expm_multiply: matrix not square");
    require(m.rows() == v.size(), "expm_multiply: dimension mismatch");
    require(m.all_finite(), "expm_multiply: non-finite entries");

    const double nrm = norm_1(m);
    const int steps = std::max(1, static_cast<int>(std::ceil(nrm / 4.0)));
    const cplx inv_steps(1.0 / steps);

    ComplexVector w = v;
    for (int s = 0; s < steps; ++s) {
        ComplexVector term = w;
        ComplexVector acc = w;
        for (int k = 1; k <= 64; ++k) {
            term = matvec(m, term);
            const cplx f = inv_steps / static_cast<double>(k);
            for (std::size_t i = 0; i < term.size(); ++i) term[i] *= f;
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += term[i];
            if (vnorm(term) <= 1e-17 * vnorm(acc)) break;
        }
        w = std::move(acc);
    }
    return w;
}

// ---- Hermitian eigendecomposition ----------------------------------------------

HermitianEig herm_eig(const ComplexMatrix& m) {
    require(m.is_square(), "herm_eig: matrix not square");
    const std::size_t n = m.rows();
    const double scale = std::max(1e-300, m.max_abs());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            if (std::abs(m(i, j) - std::conj(m(j, i))) > 1e-10 * std::max(1.0, scale))
                throw input_error("herm_eig: input is not Hermitian");

    ComplexMatrix a = m;
    // Symmetrize so rounding asymmetry cannot bias the sweeps.
    for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = cplx(a(i, i).real(), 0.0);
        for (std::size_t j = i + 1; j < n; ++j) {
            const cplx avg = 0.5 * (a(i, j) + std::conj(a(j, i)));
            a(i, j) = avg;
            a(j, i) = std::conj(avg);
        }
    }
    ComplexMatrix q = ComplexMatrix::identity(n);

    const double thresh = 1e-14 * scale;
    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t r = p + 1; r < n; ++r) off = std::max(off, std::abs(a(p, r)));
        if (off <= thresh) break;
        if (sweep == max_sweeps - 1)
            throw check_error("herm_eig: Jacobi sweeps did not converge");

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t r = p + 1; r < n; ++r) {
                const cplx apr = a(p, r);
                const double mag = std::abs(apr);
                if (mag <= thresh) continue;
                const cplx phase = apr / mag;  // e^{i phi}
                const double app = a(p, p).real();
                const double arr = a(r, r).real();
                const double tau = (arr - app) / (2.0 * mag);
                const double t = (tau >= 0.0)
                                     ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                     : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const cplx sp = s * phase;             // s e^{i phi}
                const cplx spc = s * std::conj(phase); // s e^{-i phi}

                // Columns p, r of A and of the eigenvector accumulator.
                for (std::size_t k = 0; k < n; ++k) {
                    const cplx akp = a(k, p), akr = a(k, r);
                    a(k, p) = c * akp - spc * akr;
                    a(k, r) = sp * akp + c * akr;
                    const cplx qkp = q(k, p), qkr = q(k, r);
                    q(k, p) = c * qkp - spc * qkr;
                    q(k, r) = sp * qkp + c * qkr;
                }
                // Rows p, r of A.
                for (std::size_t k = 0; k < n; ++k) {
                    const cplx apk = a(p, k), ark = a(r, k);
                    a(p, k) = c * apk - sp * ark;
                    a(r, k) = spc * apk + c * ark;
                }
                a(p, r) = 0.0;
                a(r, p) = 0.0;
                a(p, p) = cplx(a(p, p).real(), 0.0);
                a(r, r) = cplx(a(r, r).real(), 0.0);
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });

    HermitianEig out;
    out.eigenvalues.resize(n);
    out.eigenvectors = ComplexMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = a(order[j], order[j]).real();
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = q(i, order[j]);
    }
    return out;
}

ComplexMatrix psd_sqrt(const ComplexMatrix& m) {
    HermitianEig eig = herm_eig(m);
    const std::size_t n = m.rows();
    for (double lam : eig.eigenvalues)
        if (lam < -1e-8) {
            std::ostringstream os;
            os << "psd_sqrt: eigenvalue " << lam << " below the -1e-8 noise floor; input not PSD";
            throw input_error(os.str());
        }
    ComplexMatrix out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double root = std::sqrt(std::max(0.0, eig.eigenvalues[k]));
        if (root == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const cplx vik = eig.eigenvectors(i, k) * root;
            for (std::size_t j = 0; j < n; ++j)
                out(i, j) += vik * std::conj(eig.eigenvectors(j, k));
        }
    }
    return out;
}

// ---- norms ------------------------------------------------------------------------

std::vector<double> singular_values(const ComplexMatrix& m) {
    const std::size_t r = m.rows(), c = m.cols();
    ComplexMatrix h(r + c, r + c);
    h.set_block(0, r, m);
    h.set_block(r, 0, m.adjoint());
    HermitianEig eig = herm_eig(h);  // spectrum is {+sigma_i, -sigma_i, 0...}
    std::vector<double> sv;
    for (auto it = eig.eigenvalues.rbegin(); it != eig.eigenvalues.rend(); ++it) {
        if (sv.size() == std::min(r, c)) break;
        sv.push_back(std::max(0.0, *it));
    }
    return sv;
}

MatrixNorms norms(const ComplexMatrix& m) {
    const std::vector<double> sv = singular_values(m);
    MatrixNorms out{0.0, 0.0, 0.0};
    for (double s : sv) out.trace += s;
    out.spectral = sv.empty() ? 0.0 : sv.front();
    double f = 0.0;
    for (const auto& z : m.data()) f += std::norm(z);
    out.frobenius = std::sqrt(f);
    return out;
}

double spectral_norm(const ComplexMatrix& m) { return norms(m).spectral; }
double trace_norm(const ComplexMatrix& m) { return norms(m).trace; }

double frobenius_norm(const ComplexMatrix& m) {
    double f = 0.0;
    for (const auto& z : m.data()) f += std::norm(z);
    return std::sqrt(f);
}

// ---- channels -----------------------------------------------------------------------

ComplexMatrix choi_matrix(const ComplexMatrix& superop) {
    require(superop.is_square(), "choi_matrix: superoperator not square");
    const auto d = static_cast<std::size_t>(
        std::llround(std::sqrt(static_cast<double>(superop.rows()))));
    require(d * d == superop.rows(), "choi_matrix: dimension is not a perfect square");
    ComplexMatrix choi(d * d, d * d);
    for (std::size_t mrow = 0; mrow < d; ++mrow)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t nrow = 0; nrow < d; ++nrow)
                for (std::size_t j = 0; j < d; ++j)
                    choi(mrow * d + i, nrow * d + j) = superop(mrow * d + nrow, i * d + j);
    return choi;
}

KrausSet choi_kraus(const ComplexMatrix& superop) {
    const ComplexMatrix choi = choi_matrix(superop);
    const auto d = static_cast<std::size_t>(
        std::llround(std::sqrt(static_cast<double>(superop.rows()))));
    HermitianEig eig = herm_eig(choi);
    const double lam_max = std::max({1e-300, std::abs(eig.eigenvalues.front()),
                                     std::abs(eig.eigenvalues.back())});
    if (eig.eigenvalues.front() < -1e-9 * lam_max) {
        std::ostringstream os;
        os << "choi_kraus: Choi eigenvalue " << eig.eigenvalues.front()
           << " negative beyond tolerance; map is not completely positive";
        throw input_error(os.str());
    }

    KrausSet set;
    set.dim = d;
    for (std::size_t k = eig.eigenvalues.size(); k-- > 0;) {
        const double lam = eig.eigenvalues[k];
        if (lam <= 1e-12 * lam_max) continue;
        const double root = std::sqrt(lam);
        ComplexVector col(d * d);
        for (std::size_t i = 0; i < d * d; ++i) col[i] = root * eig.eigenvectors(i, k);
        set.operators.push_back(unvec(col));
    }

    ComplexMatrix completeness(d, d);
    for (const auto& kop : set.operators) completeness += kop.adjoint() * kop;
    completeness -= ComplexMatrix::identity(d);
    set.trace_preservation_defect = completeness.max_abs();
    if (set.trace_preservation_defect > 1e-7)
        throw input_error("choi_kraus: Kraus completeness defect exceeds 1e-7; map is not trace preserving");
    return set;
}

} // namespace lindode
