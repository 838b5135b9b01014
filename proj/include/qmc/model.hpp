// model.hpp — generators, the time-inhomogeneous unitary schedule U_n, the
// decoherent channel Φ_n and exact density-operator evolution.
//
// State indices are 0-based throughout the library; the CLI and the CSV
// headers present them 1-based.

#pragma once

#include "qmc/csv.hpp"
#include "qmc/errors.hpp"
#include "qmc/linalg.hpp"
#include "qmc/summation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace qmc {

enum class GraphKind { FullyConnected, Cyclic, Custom };

inline std::string_view to_string(GraphKind k) noexcept {
    switch (k) {
        case GraphKind::FullyConnected: return "full";
        case GraphKind::Cyclic: return "cyclic";
        case GraphKind::Custom: return "custom";
    }
    return "?";
}

struct GeneratorSpec {
    GraphKind kind{GraphKind::FullyConnected};
    std::size_t dim{2};
    double lambda{1.0};
    std::optional<HermitianMatrix> custom;  // required iff kind == Custom
};

enum class ScheduleForm { Exponential, TwoByTwoSqrt };

struct ScheduleParams {
    double zeta{0.0};
    ScheduleForm form{ScheduleForm::Exponential};
};

struct DecoherenceParams {
    double p{0.0};

    DecoherenceParams() = default;
    explicit DecoherenceParams(double prob) : p(prob) {
        if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("decoherence parameter p must lie in [0, 1]");
    }
    [[nodiscard]] double q() const noexcept { return 1.0 - p; }
};

// min_{ij} |G_ij|
inline double epsilon0(const HermitianMatrix& g) noexcept {
    double e = std::numeric_limits<double>::infinity();
    for (const auto& z : g.matrix().data()) e = std::min(e, std::abs(z));
    return e;
}

inline HermitianMatrix build_generator(const GeneratorSpec& spec) {
    if (spec.kind == GraphKind::Custom) {
        if (!spec.custom) throw ConfigError("custom generator requested without a matrix");
        return *spec.custom;
    }
    if (spec.dim < 2 || spec.dim > kMaxDim) throw DomainError("generator dimension must be in [2, 64]");
    if (!(spec.lambda > 0.0) || !std::isfinite(spec.lambda)) throw DomainError("lambda must be a positive real");
    ComplexMatrix g(spec.dim);
    const std::size_t m = spec.dim;
    if (spec.kind == GraphKind::FullyConnected) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) g(i, j) = spec.lambda;
    } else {
        for (std::size_t i = 0; i < m; ++i) {
            g(i, (i + 1) % m) = spec.lambda;
            g((i + 1) % m, i) = spec.lambda;
        }
    }
    return HermitianMatrix(g);
}

inline std::size_t generator_dim(const GeneratorSpec& spec) {
    return spec.kind == GraphKind::Custom && spec.custom ? spec.custom->dim() : spec.dim;
}

// U_n = e^{i G n^{-zeta/2}}
inline UnitaryMatrix step_unitary(const HermitianMatrix& g, double zeta, std::uint64_t n) {
    if (n < 1) throw DomainError("step_unitary: n must be >= 1");
    return unitary_exp(g, step_angle(zeta, n));
}

// The real 2×2 reflection [[√(1−x), √x], [√x, −√(1−x)]] with x = λ/n^ζ.
inline UnitaryMatrix example23_unitary(double lambda, double zeta, std::uint64_t n) {
    if (n < 1) throw DomainError("example23_unitary: n must be >= 1");
    const double x = lambda / std::pow(static_cast<double>(n), zeta);
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("example23_unitary: lambda/n^zeta must lie in [0, 1]");
    const double a = std::sqrt(1.0 - x);
    const double b = std::sqrt(x);
    return UnitaryMatrix(ComplexMatrix{{a, b}, {b, -a}});
}

// The unitary schedule n ↦ U_n together with ordered segment products.
// For the exponential form every U_n is a function of the same G, so a
// segment U_last···U_{first+1} is e^{iG·θ} with θ the summed step angles.
class UnitarySchedule {
public:
    UnitarySchedule(const GeneratorSpec& spec, const ScheduleParams& sched)
        : form_(sched.form), zeta_(sched.zeta), lambda_(spec.lambda) {
        if (!(sched.zeta >= 0.0) || !std::isfinite(sched.zeta)) throw DomainError("zeta must be a nonnegative real");
        if (form_ == ScheduleForm::TwoByTwoSqrt) {
            if (generator_dim(spec) != 2) throw ConfigError("sqrt2x2 schedule requires dim = 2");
            if (!(spec.lambda >= 0.0 && spec.lambda <= 1.0))
                throw DomainError("sqrt2x2 schedule requires 0 <= lambda <= 1 (lambda/n^zeta <= 1 for all n)");
            dim_ = 2;
        } else {
            generator_.emplace(build_generator(spec));
            spectrum_.emplace(eigh(*generator_));
            dim_ = generator_->dim();
        }
    }

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] double zeta() const noexcept { return zeta_; }
    [[nodiscard]] ScheduleForm form() const noexcept { return form_; }
    [[nodiscard]] bool commuting() const noexcept { return form_ == ScheduleForm::Exponential; }

    [[nodiscard]] const HermitianMatrix& generator() const {
        if (!generator_) throw DomainError("schedule has no generator (sqrt2x2 form)");
        return *generator_;
    }
    [[nodiscard]] const SpectralDecomposition& spectrum() const {
        if (!spectrum_) throw DomainError("schedule has no generator (sqrt2x2 form)");
        return *spectrum_;
    }

    [[nodiscard]] UnitaryMatrix step(std::uint64_t n) const {
        if (n < 1) throw DomainError("schedule step index must be >= 1");
        if (form_ == ScheduleForm::TwoByTwoSqrt) return example23_unitary(lambda_, zeta_, n);
        return unitary_exp(*spectrum_, step_angle(zeta_, n));
    }

    // U_last ··· U_{first+1}; the identity when last == first.
    [[nodiscard]] ComplexMatrix segment(std::uint64_t first, std::uint64_t last) const {
        if (last < first) throw DomainError("segment: last < first");
        if (form_ == ScheduleForm::Exponential) {
            const double theta = angle_sum(zeta_, first, last);
            if (theta == 0.0) return ComplexMatrix::identity(dim_);
            return spectrum_->apply([theta](double l) { return std::polar(1.0, theta * l); });
        }
        ComplexMatrix prod = ComplexMatrix::identity(dim_);
        for (std::uint64_t k = first + 1; k <= last; ++k) prod = step(k).matrix() * prod;
        return prod;
    }

private:
    ScheduleForm form_;
    double zeta_;
    double lambda_;
    std::size_t dim_{0};
    std::optional<HermitianMatrix> generator_;
    std::optional<SpectralDecomposition> spectrum_;
};

class DensityMatrix {
public:
    static constexpr double kHermitianTol = 1e-12;
    static constexpr double kTraceTol = 1e-12;
    static constexpr double kNegativeEigTol = 1e-10;

    explicit DensityMatrix(const ComplexMatrix& rho) : base_(rho.dim()) {
        if (hermitian_defect(rho) > kHermitianTol) throw DomainError("density matrix is not Hermitian");
        if (std::abs(rho.trace() - Complex(1.0)) > kTraceTol) throw DomainError("density matrix trace is not 1");
        const HermitianMatrix h(rho, kHermitianTol);
        const auto sd = eigh(h);
        if (sd.eigenvalues.back() < -kNegativeEigTol)
            throw DomainError("density matrix is not positive semidefinite");
        base_ = h.matrix();
    }

    static DensityMatrix basis(std::size_t dim, std::size_t i) {
        if (i >= dim) throw DomainError("basis state index out of range");
        ComplexMatrix rho(dim);
        rho(i, i) = 1.0;
        return DensityMatrix(Unchecked{}, std::move(rho));
    }

    static DensityMatrix maximally_mixed(std::size_t dim) {
        ComplexMatrix rho(dim);
        for (std::size_t i = 0; i < dim; ++i) rho(i, i) = 1.0 / static_cast<double>(dim);
        return DensityMatrix(Unchecked{}, std::move(rho));
    }

    [[nodiscard]] std::size_t dim() const noexcept { return base_.dim(); }
    [[nodiscard]] const ComplexMatrix& matrix() const noexcept { return base_; }

    [[nodiscard]] std::vector<double> diagonal() const {
        std::vector<double> d(dim());
        for (std::size_t i = 0; i < dim(); ++i) d[i] = base_(i, i).real();
        return d;
    }

private:
    struct Unchecked {};
    DensityMatrix(Unchecked, ComplexMatrix rho) : base_(std::move(rho)) {}

    friend DensityMatrix apply_channel(const DensityMatrix&, const UnitaryMatrix&, double);

    ComplexMatrix base_;
};

// Φ(ρ) = Σ_i A_i U ρ U* A_i* with A_0 = √(1−p)·I, A_i = √p·|i⟩⟨i|,
// which collapses to (1−p)·UρU* + p·diag(UρU*).
inline DensityMatrix apply_channel(const DensityMatrix& rho, const UnitaryMatrix& u, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("apply_channel: p must lie in [0, 1]");
    if (u.dim() != rho.dim()) throw DomainError("apply_channel: dimension mismatch");
    ComplexMatrix out = conjugate_by(u.matrix(), rho.matrix());
    const std::size_t m = out.dim();
    const double q = 1.0 - p;
    for (std::size_t r = 0; r < m; ++r) {
        out(r, r) = out(r, r).real();
        for (std::size_t c = r + 1; c < m; ++c) {
            const Complex z = q * 0.5 * (out(r, c) + std::conj(out(c, r)));
            out(r, c) = z;
            out(c, r) = std::conj(z);
        }
    }
    return DensityMatrix(DensityMatrix::Unchecked{}, std::move(out));
}

inline double site_probability(const DensityMatrix& rho, std::size_t j) {
    if (j >= rho.dim()) throw DomainError("site_probability: state index out of range");
    return std::clamp(rho.matrix()(j, j).real(), 0.0, 1.0);
}

struct TrajectoryStep {
    std::uint64_t n{0};
    std::vector<double> probabilities;
};

struct Trajectory {
    std::size_t dim{0};
    std::vector<TrajectoryStep> steps;
    std::vector<DensityMatrix> states;  // empty unless requested

    // P_n(i, j) for the run's initial state, as a series over n.
    [[nodiscard]] std::vector<double> series(std::size_t j) const {
        std::vector<double> s;
        s.reserve(steps.size());
        for (const auto& st : steps) s.push_back(st.probabilities.at(j));
        return s;
    }
};

namespace detail {

inline std::vector<double> clamped_probabilities(std::vector<double> d) {
    constexpr double kSlack = 1e-12;
    double total = 0.0;
    for (double& x : d) {
        if (x < -kSlack || x > 1.0 + kSlack) throw NumericalError("site probability left [0, 1] beyond roundoff");
        x = std::clamp(x, 0.0, 1.0);
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-10) throw NumericalError("site probabilities do not sum to 1");
    return d;
}

}  // namespace detail

// ρ_n = Φ_n ··· Φ_1(ρ_0) for n = 0..t; row n holds the diagonal of ρ_n.
inline Trajectory evolve(const DensityMatrix& rho0, const UnitarySchedule& schedule, const DecoherenceParams& dec,
                         std::uint64_t t, bool keep_states = false) {
    if (rho0.dim() != schedule.dim()) throw DomainError("evolve: initial state dimension does not match generator");
    Trajectory traj;
    traj.dim = rho0.dim();
    traj.steps.reserve(static_cast<std::size_t>(t) + 1);
    traj.steps.push_back({0, detail::clamped_probabilities(rho0.diagonal())});
    if (keep_states) traj.states.push_back(rho0);
    DensityMatrix rho = rho0;
    for (std::uint64_t n = 1; n <= t; ++n) {
        rho = apply_channel(rho, schedule.step(n), dec.p);
        traj.steps.push_back({n, detail::clamped_probabilities(rho.diagonal())});
        if (keep_states) traj.states.push_back(rho);
    }
    return traj;
}

inline Trajectory evolve(const DensityMatrix& rho0, const GeneratorSpec& spec, const ScheduleParams& sched,
                         const DecoherenceParams& dec, std::uint64_t t, bool keep_states = false) {
    return evolve(rho0, UnitarySchedule(spec, sched), dec, t, keep_states);
}

// Pure (p = 0) evolution from |i⟩⟨i| using U_n···U_1 = e^{iG·S_n}: one
// eigendecomposition, then O(m²) per step.
inline Trajectory pure_evolve_fast(std::size_t i, const UnitarySchedule& schedule, std::uint64_t t) {
    if (schedule.form() != ScheduleForm::Exponential)
        throw DomainError("pure_evolve_fast requires the exponential schedule");
    const std::size_t m = schedule.dim();
    if (i >= m) throw DomainError("pure_evolve_fast: state index out of range");
    const auto& sd = schedule.spectrum();
    const auto& b = sd.eigenvectors;

    Trajectory traj;
    traj.dim = m;
    traj.steps.reserve(static_cast<std::size_t>(t) + 1);
    std::vector<double> start(m, 0.0);
    start[i] = 1.0;
    traj.steps.push_back({0, start});

    std::vector<Complex> weight(m);  // conj(B(i, l))
    for (std::size_t l = 0; l < m; ++l) weight[l] = std::conj(b(i, l));
    std::vector<Complex> phase(m);
    std::vector<double> probs(m);
    CompensatedSum s_n;
    for (std::uint64_t n = 1; n <= t; ++n) {
        s_n.add(step_angle(schedule.zeta(), n));
        const double theta = s_n.value();
        for (std::size_t l = 0; l < m; ++l) phase[l] = std::polar(1.0, theta * sd.eigenvalues[l]) * weight[l];
        for (std::size_t j = 0; j < m; ++j) {
            Complex amp = 0.0;
            for (std::size_t l = 0; l < m; ++l) amp += b(j, l) * phase[l];
            probs[j] = std::norm(amp);
        }
        traj.steps.push_back({n, detail::clamped_probabilities(probs)});
    }
    return traj;
}

inline Trajectory pure_evolve_fast(std::size_t i, const GeneratorSpec& spec, const ScheduleParams& sched,
                                   std::uint64_t t) {
    return pure_evolve_fast(i, UnitarySchedule(spec, sched), t);
}

// CSV with header `n,p1,...,pm`.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "n";
    for (std::size_t j = 1; j <= traj.dim; ++j) os << ",p" << j;
    os << '\n';
    for (const auto& st : traj.steps) {
        os << st.n;
        for (double x : st.probabilities) os << ',' << csv::num(x);
        os << '\n';
    }
}

}  // namespace qmc
