// classical.hpp — products of inhomogeneous stochastic matrices, their
// minorization against an equilibrium matrix Π, and entry bounds for short
// unitary semigroup steps e^{iθG}.
//
// If every factor satisfies ΠP_k = Π and P_k >= δ_k·Π, then
//   P_1···P_n = (Π α_k)·(P̃_1···P̃_n) + (1 − Π α_k)·Π,   α_k = 1 − δ_k,
// so the product sits within Π α_k of Π entrywise.

#pragma once

#include "qmc/compound.hpp"
#include "qmc/csv.hpp"
#include "qmc/errors.hpp"
#include "qmc/linalg.hpp"
#include "qmc/model.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <span>
#include <vector>

namespace qmc {

// Rank-one Π with every row equal to π.
class EquilibriumMatrix {
public:
    explicit EquilibriumMatrix(std::vector<double> pi) : pi_(std::move(pi)) {
        if (pi_.empty()) throw DomainError("EquilibriumMatrix: empty distribution");
        double s = 0.0;
        for (double x : pi_) {
            if (!(x >= 0.0)) throw DomainError("EquilibriumMatrix: negative weight");
            s += x;
        }
        if (std::abs(s - 1.0) > 1e-12) throw DomainError("EquilibriumMatrix: weights must sum to 1");
    }

    static EquilibriumMatrix uniform(std::size_t m) {
        return EquilibriumMatrix(std::vector<double>(m, 1.0 / static_cast<double>(m)));
    }

    [[nodiscard]] std::size_t dim() const noexcept { return pi_.size(); }
    [[nodiscard]] std::span<const double> weights() const noexcept { return pi_; }
    double operator()(std::size_t, std::size_t j) const noexcept { return pi_[j]; }

    [[nodiscard]] StochasticMatrix matrix() const {
        const std::size_t m = dim();
        std::vector<double> e(m * m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) e[i * m + j] = pi_[j];
        return StochasticMatrix(m, std::move(e));
    }

    // ‖P − Π‖_max
    [[nodiscard]] double deviation(const StochasticMatrix& p) const {
        check(p);
        double d = 0.0;
        for (std::size_t i = 0; i < dim(); ++i)
            for (std::size_t j = 0; j < dim(); ++j) d = std::max(d, std::abs(p(i, j) - pi_[j]));
        return d;
    }

    // max_j |(πP)_j − π_j|; zero exactly when ΠP = Π.
    [[nodiscard]] double left_invariance_defect(const StochasticMatrix& p) const {
        check(p);
        double d = 0.0;
        for (std::size_t j = 0; j < dim(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < dim(); ++i) s += pi_[i] * p(i, j);
            d = std::max(d, std::abs(s - pi_[j]));
        }
        return d;
    }

    void check(const StochasticMatrix& p) const {
        if (p.dim() != dim()) throw DomainError("EquilibriumMatrix: dimension mismatch");
    }

private:
    std::vector<double> pi_;
};

// Largest δ in [0, 1] with P >= δΠ entrywise.
inline double minorization_delta(const StochasticMatrix& p, const EquilibriumMatrix& pi) {
    pi.check(p);
    double delta = 1.0;
    for (std::size_t i = 0; i < p.dim(); ++i)
        for (std::size_t j = 0; j < p.dim(); ++j) {
            const double w = pi(i, j);
            if (w > 0.0) delta = std::min(delta, p(i, j) / w);
        }
    return std::clamp(delta, 0.0, 1.0);
}

// P_1···P_n in order; the identity for an empty list.
inline StochasticMatrix inhomogeneous_product(std::span<const StochasticMatrix> ps) {
    if (ps.empty()) throw DomainError("inhomogeneous_product: empty list has no dimension; use the sized overload");
    StochasticMatrix acc = ps.front();
    for (std::size_t k = 1; k < ps.size(); ++k) {
        if (ps[k].dim() != acc.dim()) throw DomainError("inhomogeneous_product: dimension mismatch");
        acc = acc.times(ps[k]);
    }
    return acc;
}

inline StochasticMatrix inhomogeneous_product(std::size_t dim, std::span<const StochasticMatrix> ps) {
    if (ps.empty()) return StochasticMatrix::identity(dim);
    if (ps.front().dim() != dim) throw DomainError("inhomogeneous_product: dimension mismatch");
    return inhomogeneous_product(ps);
}

struct CertificateStep {
    double delta{0.0};
    double alpha{1.0};
    double running_bound{1.0};      // Π_{l<=k} α_l
    double running_deviation{0.0};  // ‖P_1···P_k − Π‖_max
    bool invariant{true};           // ΠP_k = Π within 1e-12
};

struct ContractionCertificate {
    std::vector<CertificateStep> steps;

    [[nodiscard]] double product_bound() const noexcept { return steps.empty() ? 1.0 : steps.back().running_bound; }
    [[nodiscard]] double final_deviation() const noexcept { return steps.empty() ? 0.0 : steps.back().running_deviation; }
    [[nodiscard]] bool hypothesis_holds() const noexcept {
        return std::all_of(steps.begin(), steps.end(), [](const auto& s) { return s.invariant; });
    }
    // Every prefix satisfies deviation <= bound + slack.
    [[nodiscard]] bool bound_holds(double slack = 1e-9) const noexcept {
        return std::all_of(steps.begin(), steps.end(),
                           [slack](const auto& s) { return s.running_deviation <= s.running_bound + slack; });
    }
};

inline constexpr double kInvarianceTolerance = 1e-12;

inline ContractionCertificate convergence_report(std::span<const StochasticMatrix> ps, const EquilibriumMatrix& pi) {
    ContractionCertificate cert;
    cert.steps.reserve(ps.size());
    if (ps.empty()) return cert;
    std::optional<StochasticMatrix> prefix;
    double bound = 1.0;
    for (const auto& p : ps) {
        pi.check(p);
        CertificateStep st;
        st.delta = minorization_delta(p, pi);
        st.alpha = 1.0 - st.delta;
        bound *= st.alpha;
        st.running_bound = bound;
        st.invariant = pi.left_invariance_defect(p) <= kInvarianceTolerance;
        prefix = prefix ? prefix->times(p) : p;
        st.running_deviation = pi.deviation(*prefix);
        cert.steps.push_back(st);
    }
    return cert;
}

// The analytic minorization constant m ε₀² T² / (4 σ^ζ) used for kernels of
// short segments; compare with the realized minorization_delta.
inline double analytic_delta(std::size_t m, double eps0, std::uint64_t gap, std::uint64_t sigma, double zeta) {
    const double t = static_cast<double>(gap);
    return static_cast<double>(m) * eps0 * eps0 * t * t / (4.0 * std::pow(static_cast<double>(sigma), zeta));
}

struct SemigroupBoundsReport {
    double theta{0.0};
    double theta0{0.0};
    double epsilon0{0.0};
    double g_norm{0.0};  // ‖G‖_∞, the max absolute row sum
    bool in_hypothesis{false};
    bool offdiag_lower{false};  // |U_jk| >= θ ε₀ / 2
    bool offdiag_upper{false};  // |U_jk| <= 2 θ ‖G‖_∞
    bool diag_lower{false};     // |U_jj| >= 1/2

    // Only meaningful when θ <= θ₀; outside the hypothesis nothing is asserted.
    [[nodiscard]] bool all_pass() const noexcept { return in_hypothesis && offdiag_lower && offdiag_upper && diag_lower; }
};

inline constexpr double kBoundSlack = 1e-13;

// Entry bounds for U = e^{iθG} when all |G_ij| >= ε₀ > 0 and
// θ <= θ₀ = min(ε₀ / (4‖G‖²), 1 / (4‖G‖)).
inline SemigroupBoundsReport semigroup_bounds_check(const HermitianMatrix& g, double theta) {
    if (!(theta >= 0.0) || !std::isfinite(theta)) throw DomainError("semigroup_bounds_check: theta must be >= 0");
    SemigroupBoundsReport rep;
    rep.theta = theta;
    rep.epsilon0 = epsilon0(g);
    if (!(rep.epsilon0 > 0.0)) throw DomainError("semigroup_bounds_check: requires every |G_ij| > 0 (epsilon0 > 0)");
    rep.g_norm = g.matrix().inf_norm();
    rep.theta0 = std::min(rep.epsilon0 / (4.0 * rep.g_norm * rep.g_norm), 1.0 / (4.0 * rep.g_norm));
    rep.in_hypothesis = theta <= rep.theta0;

    const auto u = unitary_exp(g, theta);
    const double lo = 0.5 * theta * rep.epsilon0;
    const double hi = 2.0 * theta * rep.g_norm;
    rep.offdiag_lower = rep.offdiag_upper = rep.diag_lower = true;
    for (std::size_t j = 0; j < g.dim(); ++j)
        for (std::size_t k = 0; k < g.dim(); ++k) {
            const double a = std::abs(u(j, k));
            if (j == k) {
                rep.diag_lower = rep.diag_lower && a >= 0.5 - kBoundSlack;
            } else {
                rep.offdiag_lower = rep.offdiag_lower && a >= lo - kBoundSlack;
                rep.offdiag_upper = rep.offdiag_upper && a <= hi + kBoundSlack;
            }
        }
    return rep;
}

// CSV with header `k,delta,alpha,running_bound,running_deviation`; k is 1-based.
inline void write_certificate_csv(std::ostream& os, const ContractionCertificate& cert) {
    os << "k,delta,alpha,running_bound,running_deviation\n";
    for (std::size_t k = 0; k < cert.steps.size(); ++k) {
        const auto& s = cert.steps[k];
        os << (k + 1) << ',' << csv::num(s.delta) << ',' << csv::num(s.alpha) << ',' << csv::num(s.running_bound)
           << ',' << csv::num(s.running_deviation) << '\n';
    }
}

}  // namespace qmc
