// verify.hpp — the cross-module property suite run by `qmc verify`, plus the
// random instance generators it shares with the tests.

#pragma once

#include "qmc/analysis.hpp"
#include "qmc/classical.hpp"
#include "qmc/compound.hpp"
#include "qmc/linalg.hpp"
#include "qmc/model.hpp"
#include "qmc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

namespace qmc {

// Hermitian m×m matrix with every |G_ij| in [min_abs, max_abs]; off-diagonal
// phases uniform, diagonal signs random.
inline HermitianMatrix random_hermitian(std::size_t m, double min_abs, double max_abs, RngStream& rng) {
    ComplexMatrix a(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double d = min_abs + (max_abs - min_abs) * rng.uniform();
        a(i, i) = rng.uniform() < 0.5 ? -d : d;
        for (std::size_t j = i + 1; j < m; ++j) {
            const double r = min_abs + (max_abs - min_abs) * rng.uniform();
            const Complex z = std::polar(r, 2.0 * std::numbers::pi * rng.uniform());
            a(i, j) = z;
            a(j, i) = std::conj(z);
        }
    }
    return HermitianMatrix(a);
}

// A·A* / tr(A·A*) for a matrix of uniform complex entries.
inline DensityMatrix random_density(std::size_t m, RngStream& rng) {
    ComplexMatrix a(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) a(i, j) = {2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0};
    ComplexMatrix rho = a * a.adjoint();
    rho *= 1.0 / rho.trace().real();
    return DensityMatrix(HermitianMatrix(rho).matrix());
}

struct CheckResult {
    std::string name;
    bool passed{false};
    double worst{0.0};      // largest observed violation measure
    double tolerance{0.0};
    std::size_t instances{0};
};

namespace detail {

inline CheckResult check_double_stochastic(RngStream& rng, std::size_t count) {
    CheckResult r{"double_stochasticity", true, 0.0, 1e-12, 0};
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform() * 4.0);
        const auto g = random_hermitian(m, 0.0, 2.0, rng);
        const double zeta = 2.5 * rng.uniform();
        const auto sigma = static_cast<std::uint64_t>(rng.uniform() * 500.0);
        const auto gap = 1 + static_cast<std::uint64_t>(rng.uniform() * 50.0);
        for (const auto& s : {q_matrix(g, zeta, sigma, gap), w_matrix(g, zeta, sigma, sigma + gap - 1)}) {
            r.worst = std::max({r.worst, s.row_defect(), s.column_defect()});
            ++r.instances;
        }
    }
    r.passed = r.worst <= r.tolerance;
    return r;
}

inline CheckResult check_trace_preservation(RngStream& rng, std::size_t count) {
    CheckResult r{"trace_preservation", true, 0.0, 1e-12, 0};
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform() * 4.0);
        const auto rho = random_density(m, rng);
        const auto g = random_hermitian(m, 0.0, 2.0, rng);
        const auto u = step_unitary(g, 2.0 * rng.uniform(), 1 + static_cast<std::uint64_t>(rng.uniform() * 100.0));
        const auto out = apply_channel(rho, u, rng.uniform());
        r.worst = std::max({r.worst, std::abs(out.matrix().trace() - Complex(1.0)), hermitian_defect(out.matrix())});
        ++r.instances;
    }
    r.passed = r.worst <= r.tolerance;
    return r;
}

inline CheckResult check_oracle_equivalence() {
    CheckResult r{"oracle_equivalence", true, 0.0, 1e-10, 0};
    for (std::size_t m : {2, 3})
        for (double p : {0.2, 0.7, 1.0})
            for (double zeta : {0.0, 0.5, 1.0}) {
                const UnitarySchedule sched({GraphKind::FullyConnected, m, 1.0, std::nullopt},
                                            {zeta, ScheduleForm::Exponential});
                const std::uint64_t t = 6;
                const auto traj = evolve(DensityMatrix::basis(m, 0), sched, DecoherenceParams(p), t);
                const auto row = enumerate_paths_row(0, sched, DecoherenceParams(p), t);
                for (std::size_t j = 0; j < m; ++j)
                    r.worst = std::max(r.worst, std::abs(row[j] - traj.steps.back().probabilities[j]));
                ++r.instances;
            }
    r.passed = r.worst <= r.tolerance;
    return r;
}

// Reports the number of failing instances as `worst`.
inline CheckResult check_semigroup_bounds(RngStream& rng, std::size_t count) {
    CheckResult r{"semigroup_entry_bounds", true, 0.0, 0.0, 0};
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform() * 4.0);
        const auto g = random_hermitian(m, 0.1, 1.0, rng);
        const double e0 = epsilon0(g);
        const double gn = g.matrix().inf_norm();
        const double theta0 = std::min(e0 / (4.0 * gn * gn), 1.0 / (4.0 * gn));
        const auto rep = semigroup_bounds_check(g, theta0 * rng.uniform_open());
        if (!rep.all_pass()) r.worst += 1.0;
        ++r.instances;
    }
    r.passed = r.worst == 0.0;
    return r;
}

// Largest excess of a prefix deviation over its contraction bound.
inline CheckResult check_contraction_bound(RngStream& rng, std::size_t count) {
    CheckResult r{"contraction_bound", true, 0.0, 1e-9, 0};
    const UnitarySchedule sched({GraphKind::FullyConnected, 2, 1.0, std::nullopt}, {0.5, ScheduleForm::Exponential});
    const auto pi = EquilibriumMatrix::uniform(2);
    double worst = -1.0;
    for (std::size_t k = 0; k < count; ++k) {
        const auto tl = sample_timeline(0.5, 2000, rng);
        const auto kernels = timeline_kernels(sched, tl);
        const std::span<const StochasticMatrix> qs(kernels.data(), tl.count());
        const auto cert = convergence_report(qs, pi);
        for (const auto& st : cert.steps) worst = std::max(worst, st.running_deviation - st.running_bound);
        if (!cert.hypothesis_holds()) worst = std::max(worst, 1.0);
        ++r.instances;
    }
    r.worst = std::max(0.0, worst);
    r.passed = worst <= r.tolerance;
    return r;
}

inline CheckResult check_closed_form() {
    CheckResult r{"closed_form_agreement", true, 0.0, 1e-10, 0};
    for (double lambda : {0.5, 1.0, 2.0})
        for (double zeta : {1.0, 1.5, 2.0}) {
            const std::uint64_t t = 500;
            const auto traj = evolve(DensityMatrix::basis(2, 0), GeneratorSpec{GraphKind::FullyConnected, 2, lambda, std::nullopt},
                                     {zeta, ScheduleForm::Exponential}, DecoherenceParams(0.0), t);
            const auto cf = closed_form_series(lambda, zeta, t);
            for (std::uint64_t n = 0; n <= t; ++n)
                r.worst = std::max(r.worst, std::abs(cf[n] - traj.steps[n].probabilities[0]));
            ++r.instances;
        }
    r.passed = r.worst <= r.tolerance;
    return r;
}

}  // namespace detail

// Runs every property check with a fixed seed; cheap enough for routine use.
inline std::vector<CheckResult> run_property_suite(std::uint64_t seed = kDefaultSeed) {
    RngStream rng(seed, 7);
    std::vector<CheckResult> out;
    out.push_back(detail::check_double_stochastic(rng, 500));
    out.push_back(detail::check_trace_preservation(rng, 500));
    out.push_back(detail::check_oracle_equivalence());
    out.push_back(detail::check_semigroup_bounds(rng, 500));
    out.push_back(detail::check_contraction_bound(rng, 20));
    out.push_back(detail::check_closed_form());
    return out;
}

// CSV with header `check,status,worst,tolerance,instances`.
inline void write_checks_csv(std::ostream& os, const std::vector<CheckResult>& checks) {
    os << "check,status,worst,tolerance,instances\n";
    for (const auto& c : checks)
        os << c.name << ',' << (c.passed ? "pass" : "fail") << ',' << csv::num(c.worst) << ',' << csv::num(c.tolerance)
           << ',' << c.instances << '\n';
}

}  // namespace qmc
