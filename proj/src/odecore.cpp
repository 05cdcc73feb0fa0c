#include "lindode/odecore.hpp"
#include "lindode/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lindode {

// ---- TimeDependentMatrix ------------------------------------------------------

TimeDependentMatrix TimeDependentMatrix::constant(ComplexMatrix m) {
    if (!m.all_finite()) throw input_error("TimeDependentMatrix: non-finite entries");
    TimeDependentMatrix td;
    td.kind_ = Kind::constant;
    td.dim_ = m.rows();
    if (!m.is_square() && m.cols() != 1)
        throw input_error("TimeDependentMatrix: expected square matrix or column vector");
    td.constant_ = std::move(m);
    td.name_ = "constant";
    return td;
}

TimeDependentMatrix TimeDependentMatrix::knots(std::vector<double> times,
                                               std::vector<ComplexMatrix> values) {
    if (times.size() < 2 || times.size() != values.size())
        throw input_error("TimeDependentMatrix: need >= 2 knots with matching times/values");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1]))
            throw input_error("TimeDependentMatrix: knot times must be strictly increasing");
    for (const auto& m : values) {
        if (m.rows() != values[0].rows() || m.cols() != values[0].cols())
            throw input_error("TimeDependentMatrix: knot shapes differ");
        if (!m.all_finite()) throw input_error("TimeDependentMatrix: non-finite knot entries");
    }
    TimeDependentMatrix td;
    td.kind_ = Kind::knots;
    td.dim_ = values[0].rows();
    td.times_ = std::move(times);
    td.values_ = std::move(values);
    td.name_ = "knots";
    return td;
}

TimeDependentMatrix TimeDependentMatrix::generator(std::string name,
                                                   std::function<ComplexMatrix(double)> fn,
                                                   std::size_t dim) {
    TimeDependentMatrix td;
    td.kind_ = Kind::generator;
    td.dim_ = dim;
    td.fn_ = std::move(fn);
    td.name_ = std::move(name);
    return td;
}

ComplexMatrix TimeDependentMatrix::eval(double t) const {
    switch (kind_) {
        case Kind::constant:
            return constant_;
        case Kind::generator:
            return fn_(t);
        case Kind::knots: {
            if (t <= times_.front()) return values_.front();
            if (t >= times_.back()) return values_.back();
            const auto it = std::upper_bound(times_.begin(), times_.end(), t);
            const std::size_t hi = static_cast<std::size_t>(it - times_.begin());
            const std::size_t lo = hi - 1;
            const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
            ComplexMatrix out = values_[lo];
            out *= cplx(1.0 - w);
            ComplexMatrix right = values_[hi];
            right *= cplx(w);
            out += right;
            return out;
        }
    }
    throw check_error("TimeDependentMatrix: unreachable kind");
}

const ComplexMatrix& TimeDependentMatrix::constant_value() const {
    if (kind_ != Kind::constant)
        throw input_error("TimeDependentMatrix: constant_value on non-constant kind");
    return constant_;
}

double TimeDependentMatrix::knot_rate_bound() const {
    if (kind_ == Kind::constant) return 0.0;
    if (kind_ == Kind::generator)
        throw input_error("TimeDependentMatrix: no rate bound for generator kind");
    double bound = 0.0;
    for (std::size_t k = 1; k < times_.size(); ++k) {
        ComplexMatrix diff = values_[k];
        diff -= values_[k - 1];
        bound = std::max(bound, frobenius_norm(diff) / (times_[k] - times_[k - 1]));
    }
    return bound;
}

TimeDependentMatrix TimeDependentMatrix::map(
    const std::string& suffix, std::function<ComplexMatrix(const ComplexMatrix&)> f) const {
    switch (kind_) {
        case Kind::constant:
            return constant(f(constant_));
        case Kind::knots: {
            std::vector<ComplexMatrix> mapped;
            mapped.reserve(values_.size());
            for (const auto& m : values_) mapped.push_back(f(m));
            return knots(times_, std::move(mapped));
        }
        case Kind::generator: {
            auto inner = fn_;
            return generator(name_ + "." + suffix,
                             [inner, f](double t) { return f(inner(t)); },
                             f(fn_(0.0)).rows());
        }
    }
    throw check_error("TimeDependentMatrix: unreachable kind");
}

// ---- OdeProblem ------------------------------------------------------------------

OdeProblem OdeProblem::make(TimeDependentMatrix V, ComplexVector mu0, double T,
                            std::optional<TimeDependentMatrix> b) {
    OdeProblem p;
    p.dim = V.dim();
    if (V.dim() != mu0.size())
        throw input_error("OdeProblem: V and mu0 dimensions differ");
    if (std::abs(vnorm(mu0) - 1.0) > 1e-12)
        throw input_error("OdeProblem: mu0 is not normalized (unit norm within 1e-12 required)");
    if (!(T >= 0.0) || !std::isfinite(T)) throw input_error("OdeProblem: T must be finite and >= 0");
    if (b && b->dim() != V.dim())
        throw input_error("OdeProblem: source term dimension differs from V");
    p.V = std::move(V);
    p.mu0 = std::move(mu0);
    p.T = T;
    p.b = std::move(b);
    return p;
}

// ---- Hermitian split ----------------------------------------------------------------

HermitianSplit hermitian_split(const ComplexMatrix& v) {
    if (!v.is_square()) throw input_error("hermitian_split: matrix not square");
    const ComplexMatrix vh = v.adjoint();
    ComplexMatrix a = v;
    a -= vh;
    a *= cplx(0.0, -0.5);  // (V - V^H) / (2i)
    ComplexMatrix b = v;
    b += vh;
    b *= cplx(0.5);
    return {std::move(a), std::move(b)};
}

std::pair<TimeDependentMatrix, TimeDependentMatrix> hermitian_split(const TimeDependentMatrix& v) {
    auto a = v.map("antihermitian", [](const ComplexMatrix& m) { return hermitian_split(m).A; });
    auto b = v.map("hermitian", [](const ComplexMatrix& m) { return hermitian_split(m).B; });
    return {std::move(a), std::move(b)};
}

// ---- structural checks -----------------------------------------------------------------

namespace {

std::vector<double> evaluation_grid(const TimeDependentMatrix& v, double T,
                                    std::size_t grid_points) {
    std::vector<double> grid;
    if (grid_points < 2) grid_points = 2;
    for (std::size_t k = 0; k < grid_points; ++k)
        grid.push_back(T * static_cast<double>(k) / static_cast<double>(grid_points - 1));
    if (v.kind() == TimeDependentMatrix::Kind::knots)
        for (double t : v.knot_times())
            if (t >= 0.0 && t <= T) grid.push_back(t);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

} // namespace

DissipativityVerdict check_semi_dissipative(const TimeDependentMatrix& v, double T,
                                            std::size_t grid_points) {
    DissipativityVerdict verdict;
    verdict.ok = true;
    verdict.worst_eigenvalue = std::numeric_limits<double>::infinity();
    for (double t : evaluation_grid(v, T, grid_points)) {
        const ComplexMatrix b = hermitian_split(v.eval(t)).B;
        const double lam_min = herm_eig(b).eigenvalues.front();
        if (lam_min < verdict.worst_eigenvalue) {
            verdict.worst_eigenvalue = lam_min;
            verdict.worst_t = t;
        }
    }
    verdict.ok = verdict.worst_eigenvalue >= -1e-8;
    return verdict;
}

double spectral_gap(const ComplexMatrix& b) {
    const HermitianEig eig = herm_eig(b);
    const double scale = std::max(std::abs(eig.eigenvalues.front()),
                                  std::abs(eig.eigenvalues.back()));
    const double zero_thresh = 1e-12 * scale;
    if (eig.eigenvalues.front() < -1e-8)
        throw input_error("spectral_gap: matrix has a negative eigenvalue; not PSD");
    double gap = 0.0;
    for (double lam : eig.eigenvalues)
        if (lam > zero_thresh) { gap = lam; break; }
    if (gap == 0.0)
        throw input_error("spectral_gap: nonzero spectrum is empty (matrix is numerically zero)");
    return gap;
}

double spectral_gap_min(const TimeDependentMatrix& b, double T, std::size_t grid_points) {
    double gap = std::numeric_limits<double>::infinity();
    for (double t : evaluation_grid(b, T, grid_points))
        gap = std::min(gap, spectral_gap(b.eval(t)));
    return gap;
}

// ---- adaptive integrator -----------------------------------------------------------------

namespace {

// Dormand-Prince 4(5) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b*: weights of the embedded error estimate.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Rhs {
    const TimeDependentMatrix& v;
    const std::optional<TimeDependentMatrix>& b;

    ComplexVector operator()(double t, const ComplexVector& y) const {
        ComplexMatrix vt = v.eval(t);
        ComplexVector out = matvec(vt, y);
        for (auto& z : out) z = -z;
        if (b) {
            const ComplexMatrix bt = b->eval(t);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += bt(i, 0);
        }
        return out;
    }
};

} // namespace

namespace {

/// Shared adaptive stepper. record_all keeps every accepted step; otherwise
/// only the endpoints are stored.
Trajectory solve_adaptive(const TimeDependentMatrix& v, const std::optional<TimeDependentMatrix>& b,
                          const ComplexVector& y0, double t0, double t1, double rtol,
                          bool record_all) {
    if (!(t1 >= t0)) throw input_error("integrate: backwards interval");
    if (!(rtol > 0.0)) throw input_error("integrate: rtol must be positive");
    const double atol = 1e-14;
    const std::size_t n = y0.size();
    Rhs rhs{v, b};

    Trajectory traj;
    traj.times.push_back(t0);
    traj.states.push_back(y0);
    if (t1 == t0) return traj;

    double t = t0;
    ComplexVector y = y0;
    const double span = t1 - t0;
    double h = std::min(span, 0.1 / (1.0 + frobenius_norm(v.eval(t0))));
    const double h_min = 1e-14 * std::max(1.0, span);
    const int max_steps = 2000000;

    for (int step = 0; step < max_steps; ++step) {
        if (t >= t1) break;
        h = std::min(h, t1 - t);
        if (h < h_min) {
            std::ostringstream os;
            os << "integrate: step size underflow at t = " << t;
            throw check_error(os.str());
        }

        const ComplexVector k1 = rhs(t, y);
        auto stage = [&](std::initializer_list<std::pair<double, const ComplexVector*>> terms) {
            ComplexVector s = y;
            for (const auto& [coef, kv] : terms)
                for (std::size_t i = 0; i < n; ++i) s[i] += h * coef * (*kv)[i];
            return s;
        };
        const ComplexVector k2 = rhs(t + c2 * h, stage({{a21, &k1}}));
        const ComplexVector k3 = rhs(t + c3 * h, stage({{a31, &k1}, {a32, &k2}}));
        const ComplexVector k4 = rhs(t + c4 * h, stage({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        const ComplexVector k5 =
            rhs(t + c5 * h, stage({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        const ComplexVector k6 =
            rhs(t + h, stage({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));

        ComplexVector y5(n);
        for (std::size_t i = 0; i < n; ++i)
            y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        const ComplexVector k7 = rhs(t + h, y5);

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const cplx de = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                 e6 * k6[i] + e7 * k7[i]);
            const double scale = atol + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
            const double r = std::abs(de) / scale;
            err += r * r;
        }
        err = std::sqrt(err / static_cast<double>(n));

        if (err <= 1.0) {
            t += h;
            y = std::move(y5);
            if (record_all || t >= t1) {
                traj.times.push_back(t);
                traj.states.push_back(y);
            }
        }
        const double factor = (err == 0.0) ? 5.0 : 0.9 * std::pow(err, -0.2);
        h *= std::clamp(factor, 0.2, 5.0);
    }
    if (t < t1) throw check_error("integrate: step budget exhausted before reaching t1");
    return traj;
}

} // namespace

ComplexVector integrate_linear(const TimeDependentMatrix& v,
                               const std::optional<TimeDependentMatrix>& b,
                               const ComplexVector& y0, double t0, double t1,
                               double rtol) {
    return solve_adaptive(v, b, y0, t0, t1, rtol, false).states.back();
}

Trajectory reference_solve(const OdeProblem& p, double rtol) {
    Trajectory traj = solve_adaptive(p.V, p.b, p.mu0, 0.0, p.T, rtol, true);
    if (p.V.is_constant() && !p.b && p.T > 0.0) {
        // Independent endpoint check through the matrix exponential.
        ComplexMatrix gen = p.V.constant_value();
        gen *= cplx(-p.T);
        const ComplexVector exact = expm_multiply(gen, p.mu0);
        const double diff = vnorm(vsub(traj.final_state(), exact));
        if (diff > 10.0 * rtol * std::max(1.0, vnorm(exact))) {
            std::ostringstream os;
            os << "reference_solve: adaptive endpoint disagrees with expm by " << diff
               << " (allowed " << 10.0 * rtol << ")";
            throw check_error(os.str());
        }
    }
    return traj;
}

ComplexVector duhamel_compose(const OdeProblem& p, std::size_t m, double rtol) {
    if (m == 0) throw input_error("duhamel_compose: need at least one slice");
    ComplexVector total = integrate_linear(p.V, std::nullopt, p.mu0, 0.0, p.T, rtol);
    if (!p.b || p.T == 0.0) return total;

    std::vector<ComplexVector> slices(m);
    const double w = p.T / static_cast<double>(m);
    const std::ptrdiff_t mm = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t j = 0; j < mm; ++j) {
        const double tj = (static_cast<double>(j) + 0.5) * w;
        const ComplexMatrix bt = p.b->eval(tj);
        ComplexVector bj(p.dim);
        for (std::size_t i = 0; i < p.dim; ++i) bj[i] = bt(i, 0);
        slices[static_cast<std::size_t>(j)] =
            integrate_linear(p.V, std::nullopt, bj, tj, p.T, rtol);
    }
    // Fixed-order reduction keeps the result independent of thread schedule.
    for (const auto& s : slices)
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += w * s[i];
    return total;
}

} // namespace lindode
