// linalg.hpp — dense complex matrices, Hermitian eigendecomposition (cyclic
// Jacobi) and spectral exponentials e^{i theta H}.
//
// Everything here is sized for the small state spaces the walks live on
// (m <= 64); storage is a row-major std::vector of std::complex<double>.

#pragma once

#include "qmc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace qmc {

using Complex = std::complex<double>;

inline constexpr std::size_t kMaxDim = 64;

class ComplexMatrix {
public:
    ComplexMatrix() = default;

    // Zero matrix of the given dimension.
    explicit ComplexMatrix(std::size_t dim) : dim_(dim), data_(dim * dim) {
        if (dim == 0) throw DomainError("ComplexMatrix: dimension must be >= 1");
    }

    // Row-major entries; rejects non-square input and non-finite values.
    ComplexMatrix(std::size_t dim, std::vector<Complex> entries) : dim_(dim), data_(std::move(entries)) {
        if (dim == 0) throw DomainError("ComplexMatrix: dimension must be >= 1");
        if (data_.size() != dim * dim) throw DomainError("ComplexMatrix: entry count is not dim*dim");
        for (const auto& z : data_) {
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                throw DomainError("ComplexMatrix: non-finite entry");
        }
    }

    ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows) {
        dim_ = rows.size();
        if (dim_ == 0) throw DomainError("ComplexMatrix: dimension must be >= 1");
        data_.reserve(dim_ * dim_);
        for (const auto& row : rows) {
            if (row.size() != dim_) throw DomainError("ComplexMatrix: matrix must be square");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static ComplexMatrix identity(std::size_t dim) {
        ComplexMatrix id(dim);
        for (std::size_t i = 0; i < dim; ++i) id(i, i) = 1.0;
        return id;
    }

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

    Complex& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * dim_ + c]; }
    const Complex& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * dim_ + c]; }

    [[nodiscard]] std::span<const Complex> data() const noexcept { return data_; }

    [[nodiscard]] ComplexMatrix adjoint() const {
        ComplexMatrix out(dim_);
        for (std::size_t r = 0; r < dim_; ++r)
            for (std::size_t c = 0; c < dim_; ++c) out(c, r) = std::conj((*this)(r, c));
        return out;
    }

    [[nodiscard]] Complex trace() const noexcept {
        Complex t = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
        return t;
    }

    // max_{ij} |a_ij|
    [[nodiscard]] double max_abs() const noexcept {
        double m = 0.0;
        for (const auto& z : data_) m = std::max(m, std::abs(z));
        return m;
    }

    [[nodiscard]] double frobenius_norm() const noexcept {
        double s = 0.0;
        for (const auto& z : data_) s += std::norm(z);
        return std::sqrt(s);
    }

    // Operator norm induced by the sup norm: the largest absolute row sum.
    [[nodiscard]] double inf_norm() const noexcept {
        double best = 0.0;
        for (std::size_t r = 0; r < dim_; ++r) {
            double row = 0.0;
            for (std::size_t c = 0; c < dim_; ++c) row += std::abs((*this)(r, c));
            best = std::max(best, row);
        }
        return best;
    }

    ComplexMatrix& operator+=(const ComplexMatrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    ComplexMatrix& operator-=(const ComplexMatrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    ComplexMatrix& operator*=(Complex s) noexcept {
        for (auto& z : data_) z *= s;
        return *this;
    }

    friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
    friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
    friend ComplexMatrix operator*(ComplexMatrix a, Complex s) { return a *= s; }
    friend ComplexMatrix operator*(Complex s, ComplexMatrix a) { return a *= s; }

    friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
        a.check_same(b);
        const std::size_t n = a.dim_;
        ComplexMatrix out(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                const Complex aik = a(i, k);
                if (aik == Complex{}) continue;
                for (std::size_t j = 0; j < n; ++j) out(i, j) += aik * b(k, j);
            }
        return out;
    }

private:
    void check_same(const ComplexMatrix& o) const {
        if (o.dim_ != dim_) throw DomainError("ComplexMatrix: dimension mismatch");
    }

    std::size_t dim_{0};
    std::vector<Complex> data_;
};

// ‖a − b‖_max
inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    return (a - b).max_abs();
}

// Largest |a_jk − conj(a_kj)|.
inline double hermitian_defect(const ComplexMatrix& a) noexcept {
    double d = 0.0;
    for (std::size_t r = 0; r < a.dim(); ++r)
        for (std::size_t c = r; c < a.dim(); ++c) d = std::max(d, std::abs(a(r, c) - std::conj(a(c, r))));
    return d;
}

// U·A·U*
inline ComplexMatrix conjugate_by(const ComplexMatrix& u, const ComplexMatrix& a) {
    return u * a * u.adjoint();
}

class HermitianMatrix {
public:
    // Accepts a matrix that is Hermitian to within `tol` (relative to 1 + ‖a‖_max)
    // and symmetrizes it exactly.
    explicit HermitianMatrix(const ComplexMatrix& a, double tol = 1e-12) : base_(a.dim()) {
        const double defect = hermitian_defect(a);
        if (defect > tol * (1.0 + a.max_abs())) {
            std::ostringstream os;
            os << "HermitianMatrix: input is not Hermitian (defect " << defect << ")";
            throw DomainError(os.str());
        }
        for (std::size_t r = 0; r < a.dim(); ++r) {
            base_(r, r) = a(r, r).real();
            for (std::size_t c = r + 1; c < a.dim(); ++c) {
                const Complex z = 0.5 * (a(r, c) + std::conj(a(c, r)));
                base_(r, c) = z;
                base_(c, r) = std::conj(z);
            }
        }
    }

    [[nodiscard]] std::size_t dim() const noexcept { return base_.dim(); }
    [[nodiscard]] const ComplexMatrix& matrix() const noexcept { return base_; }
    const Complex& operator()(std::size_t r, std::size_t c) const noexcept { return base_(r, c); }

private:
    ComplexMatrix base_;
};

class UnitaryMatrix {
public:
    static constexpr double kTolerance = 1e-12;

    explicit UnitaryMatrix(ComplexMatrix u) : base_(std::move(u)) {
        const double defect = unitarity_defect(base_);
        if (defect > kTolerance) {
            std::ostringstream os;
            os << "UnitaryMatrix: ‖U·U* − I‖_max = " << defect << " exceeds " << kTolerance;
            throw NumericalError(os.str());
        }
    }

    static double unitarity_defect(const ComplexMatrix& u) {
        return max_abs_diff(u * u.adjoint(), ComplexMatrix::identity(u.dim()));
    }

    [[nodiscard]] std::size_t dim() const noexcept { return base_.dim(); }
    [[nodiscard]] const ComplexMatrix& matrix() const noexcept { return base_; }
    const Complex& operator()(std::size_t r, std::size_t c) const noexcept { return base_(r, c); }

    friend UnitaryMatrix operator*(const UnitaryMatrix& a, const UnitaryMatrix& b) {
        return UnitaryMatrix(a.base_ * b.base_);
    }

private:
    ComplexMatrix base_;
};

struct SpectralDecomposition {
    std::vector<double> eigenvalues;  // descending
    ComplexMatrix eigenvectors;       // columns, unitary

    [[nodiscard]] std::size_t dim() const noexcept { return eigenvalues.size(); }

    // B·diag(f(λ_k))·B*
    template <class F>
    [[nodiscard]] ComplexMatrix apply(F&& f) const {
        const std::size_t n = dim();
        std::vector<Complex> w(n);
        for (std::size_t k = 0; k < n; ++k) w[k] = f(eigenvalues[k]);
        ComplexMatrix out(n);
        const ComplexMatrix& b = eigenvectors;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                Complex s = 0.0;
                for (std::size_t k = 0; k < n; ++k) s += b(i, k) * w[k] * std::conj(b(j, k));
                out(i, j) = s;
                if (j != i) {
                    // Not Hermitian in general (f complex), so compute the mirror entry too.
                    Complex t = 0.0;
                    for (std::size_t k = 0; k < n; ++k) t += b(j, k) * w[k] * std::conj(b(i, k));
                    out(j, i) = t;
                }
            }
        return out;
    }

    [[nodiscard]] ComplexMatrix reconstruct() const {
        return apply([](double lambda) { return Complex(lambda, 0.0); });
    }
};

namespace detail {

inline double off_diagonal_norm(const ComplexMatrix& a) noexcept {
    double s = 0.0;
    for (std::size_t r = 0; r < a.dim(); ++r)
        for (std::size_t c = 0; c < a.dim(); ++c)
            if (r != c) s += std::norm(a(r, c));
    return std::sqrt(s);
}

}  // namespace detail

inline constexpr int kJacobiMaxSweeps = 100;
inline constexpr double kJacobiRelTolerance = 1e-13;

// Cyclic Jacobi eigensolver for Hermitian matrices.
//
// Each rotation first removes the phase of a_pq, then applies the real Jacobi
// rotation that annihilates it. Sweeps continue until the off-diagonal
// Frobenius norm drops below 1e-13·‖G‖_F.
inline SpectralDecomposition eigh(const HermitianMatrix& h) {
    const std::size_t n = h.dim();
    if (n > kMaxDim) throw DomainError("eigh: dimension exceeds 64");
    ComplexMatrix a = h.matrix();
    ComplexMatrix v = ComplexMatrix::identity(n);
    const double scale = a.frobenius_norm();
    const double target = kJacobiRelTolerance * scale;

    int sweep = 0;
    for (; sweep < kJacobiMaxSweeps; ++sweep) {
        if (detail::off_diagonal_norm(a) <= target) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const Complex apq = a(p, q);
                const double mag = std::abs(apq);
                if (mag == 0.0 || mag < 1e-300) continue;
                const Complex phase = apq / mag;  // e^{i phi}
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double tau = (aqq - app) / (2.0 * mag);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // Rotation V restricted to (p, q):
                //   [ c             s           ]
                //   [ -s e^{-i phi} c e^{-i phi} ]
                const Complex vpp = c;
                const Complex vpq = s;
                const Complex vqp = -s * std::conj(phase);
                const Complex vqq = c * std::conj(phase);

                for (std::size_t k = 0; k < n; ++k) {  // A <- A V
                    const Complex akp = a(k, p);
                    const Complex akq = a(k, q);
                    a(k, p) = akp * vpp + akq * vqp;
                    a(k, q) = akp * vpq + akq * vqq;
                }
                for (std::size_t k = 0; k < n; ++k) {  // A <- V* A
                    const Complex apk = a(p, k);
                    const Complex aqk = a(q, k);
                    a(p, k) = std::conj(vpp) * apk + std::conj(vqp) * aqk;
                    a(q, k) = std::conj(vpq) * apk + std::conj(vqq) * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
                for (std::size_t k = 0; k < n; ++k) {  // B <- B V
                    const Complex vkp = v(k, p);
                    const Complex vkq = v(k, q);
                    v(k, p) = vkp * vpp + vkq * vqp;
                    v(k, q) = vkp * vpq + vkq * vqq;
                }
            }
        }
    }
    const double residual = detail::off_diagonal_norm(a);
    if (residual > target) {
        std::ostringstream os;
        os << "eigh: no convergence after " << kJacobiMaxSweeps << " sweeps (off-diagonal norm " << residual << ")";
        throw NumericalError(os.str());
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x).real() > a(y, y).real(); });

    SpectralDecomposition out{std::vector<double>(n), ComplexMatrix(n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.eigenvalues[k] = a(order[k], order[k]).real();
        for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, k) = v(r, order[k]);
    }
    return out;
}

// e^{i theta H} from a precomputed decomposition of H.
inline UnitaryMatrix unitary_exp(const SpectralDecomposition& sd, double theta) {
    if (!std::isfinite(theta)) throw DomainError("unitary_exp: theta must be finite");
    if (theta == 0.0) return UnitaryMatrix(ComplexMatrix::identity(sd.dim()));
    return UnitaryMatrix(sd.apply([theta](double lambda) { return std::polar(1.0, theta * lambda); }));
}

inline UnitaryMatrix unitary_exp(const HermitianMatrix& h, double theta) {
    if (!std::isfinite(theta)) throw DomainError("unitary_exp: theta must be finite");
    return unitary_exp(eigh(h), theta);
}

}  // namespace qmc
