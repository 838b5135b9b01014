// compound.hpp — the compound Markov chain picture of the decoherent walk.
//
// Measurements happen at geometric times σ_1 < σ_2 < ...; between them the
// walk is coherent, so the outcome chain moves with the doubly stochastic
// kernels Q_{σ_{k-1}}(i, j) = |⟨j|U_{σ_k}···U_{σ_{k-1}+1}|i⟩|², and the tail
// after the last measurement contributes W_{σ_{n_t}}. Site probabilities are
// expectations of Q···QW over timelines; this header provides the sampler,
// the Monte Carlo estimator and a brute-force enumerator over all
// decoherence-time subsets.

#pragma once

#include "qmc/csv.hpp"
#include "qmc/errors.hpp"
#include "qmc/model.hpp"
#include "qmc/rng.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <optional>
#include <sstream>
#include <span>
#include <thread>
#include <vector>

namespace qmc {

class StochasticMatrix {
public:
    static constexpr double kRowTolerance = 1e-12;

    // Row-major entries; rows must sum to 1 within `tol` and entries be >= -tol.
    StochasticMatrix(std::size_t dim, std::vector<double> entries, double tol = kRowTolerance)
        : dim_(dim), data_(std::move(entries)) {
        if (dim == 0 || data_.size() != dim * dim) throw DomainError("StochasticMatrix: bad shape");
        for (double& x : data_) {
            if (!(x >= -tol)) throw NumericalError("StochasticMatrix: negative entry");
            x = std::max(x, 0.0);
        }
        if (row_defect() > tol) {
            std::ostringstream os;
            os << "StochasticMatrix: row sums deviate from 1 by " << row_defect();
            throw NumericalError(os.str());
        }
    }

    static StochasticMatrix identity(std::size_t dim) {
        std::vector<double> e(dim * dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i) e[i * dim + i] = 1.0;
        return StochasticMatrix(dim, std::move(e));
    }

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * dim_ + j]; }
    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
        return std::span<const double>(data_).subspan(i * dim_, dim_);
    }

    [[nodiscard]] double row_defect() const noexcept {
        double d = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) s += (*this)(i, j);
            d = std::max(d, std::abs(s - 1.0));
        }
        return d;
    }

    [[nodiscard]] double column_defect() const noexcept {
        double d = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < dim_; ++i) s += (*this)(i, j);
            d = std::max(d, std::abs(s - 1.0));
        }
        return d;
    }

    [[nodiscard]] bool doubly_stochastic(double tol = kRowTolerance) const noexcept {
        return row_defect() <= tol && column_defect() <= tol;
    }

    // Row vector times matrix.
    void propagate(std::span<const double> v, std::span<double> out) const noexcept {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < dim_; ++i) {
            const double vi = v[i];
            if (vi == 0.0) continue;
            for (std::size_t j = 0; j < dim_; ++j) out[j] += vi * (*this)(i, j);
        }
    }

    [[nodiscard]] StochasticMatrix times(const StochasticMatrix& o, double tol = 1e-10) const {
        if (o.dim_ != dim_) throw DomainError("StochasticMatrix: dimension mismatch");
        std::vector<double> e(dim_ * dim_, 0.0);
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t k = 0; k < dim_; ++k) {
                const double a = (*this)(i, k);
                for (std::size_t j = 0; j < dim_; ++j) e[i * dim_ + j] += a * o(k, j);
            }
        return StochasticMatrix(dim_, std::move(e), tol);
    }

private:
    std::size_t dim_;
    std::vector<double> data_;
};

// M(i, j) = |U(j, i)|²
inline StochasticMatrix transition_from_unitary(const ComplexMatrix& u) {
    const std::size_t m = u.dim();
    std::vector<double> e(m * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) e[i * m + j] = std::norm(u(j, i));
    return StochasticMatrix(m, std::move(e));
}

struct MeasurementTimeline {
    std::uint64_t horizon{0};
    std::vector<std::uint64_t> gaps;      // T_1, T_2, ...; the last one overshoots the horizon
    std::vector<std::uint64_t> arrivals;  // σ_1, σ_2, ... matching gaps

    // n_t = max{n : σ_n <= t}
    [[nodiscard]] std::size_t count() const noexcept {
        return static_cast<std::size_t>(
            std::upper_bound(arrivals.begin(), arrivals.end(), horizon) - arrivals.begin());
    }

    // σ_{n_t}, with σ_0 = 0.
    [[nodiscard]] std::uint64_t last_arrival() const noexcept {
        const std::size_t n = count();
        return n == 0 ? 0 : arrivals[n - 1];
    }

    // σ_{k}, k = 0..n_t
    [[nodiscard]] std::uint64_t sigma(std::size_t k) const { return k == 0 ? 0 : arrivals.at(k - 1); }

    static MeasurementTimeline from_gaps(std::uint64_t horizon, std::vector<std::uint64_t> gaps) {
        MeasurementTimeline tl;
        tl.horizon = horizon;
        std::uint64_t s = 0;
        for (auto g : gaps) {
            if (g < 1) throw DomainError("measurement gaps must be >= 1");
            s += g;
            tl.arrivals.push_back(s);
        }
        tl.gaps = std::move(gaps);
        return tl;
    }
};

// Geometric gap on {1, 2, ...}, P(T = k) = p(1−p)^{k−1}, by inverse CDF.
inline std::uint64_t sample_geometric(double p, RngStream& rng) {
    if (p >= 1.0) {
        rng.next_u64();  // keep stream consumption independent of p
        return 1;
    }
    const double u = rng.uniform_open();
    const double k = std::ceil(std::log(u) / std::log1p(-p));
    if (!(k < 1e18)) return static_cast<std::uint64_t>(1e18);
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(k));
}

// Draws gaps until the first arrival beyond t.
inline MeasurementTimeline sample_timeline(double p, std::uint64_t t, RngStream& rng) {
    if (!(p > 0.0 && p <= 1.0)) throw DomainError("sample_timeline: p must lie in (0, 1]");
    MeasurementTimeline tl;
    tl.horizon = t;
    std::uint64_t s = 0;
    while (s <= t) {
        const std::uint64_t g = sample_geometric(p, rng);
        s += g;
        tl.gaps.push_back(g);
        tl.arrivals.push_back(s);
    }
    return tl;
}

// Q_{σ}(i, j) = |⟨j|U_{σ+T}···U_{σ+1}|i⟩|²
inline StochasticMatrix q_matrix(const UnitarySchedule& schedule, std::uint64_t sigma_prev, std::uint64_t gap) {
    if (gap < 1) throw DomainError("q_matrix: gap must be >= 1");
    return transition_from_unitary(schedule.segment(sigma_prev, sigma_prev + gap));
}

inline StochasticMatrix q_matrix(const HermitianMatrix& g, double zeta, std::uint64_t sigma_prev, std::uint64_t gap) {
    if (gap < 1) throw DomainError("q_matrix: gap must be >= 1");
    const double theta = angle_sum(zeta, sigma_prev, sigma_prev + gap);
    return transition_from_unitary(unitary_exp(g, theta).matrix());
}

// W_{σ}(i, j) = |⟨j|U_t···U_{σ+1}|i⟩|²; the identity when σ = t.
inline StochasticMatrix w_matrix(const UnitarySchedule& schedule, std::uint64_t sigma_last, std::uint64_t t) {
    if (sigma_last > t) throw DomainError("w_matrix: last measurement time exceeds the horizon");
    if (sigma_last == t) return StochasticMatrix::identity(schedule.dim());
    return transition_from_unitary(schedule.segment(sigma_last, t));
}

inline StochasticMatrix w_matrix(const HermitianMatrix& g, double zeta, std::uint64_t sigma_last, std::uint64_t t) {
    if (sigma_last > t) throw DomainError("w_matrix: last measurement time exceeds the horizon");
    if (sigma_last == t) return StochasticMatrix::identity(g.dim());
    return transition_from_unitary(unitary_exp(g, angle_sum(zeta, sigma_last, t)).matrix());
}

// The ordered kernels Q_{σ_0}, ..., Q_{σ_{n_t−1}} of a timeline.
inline std::vector<StochasticMatrix> timeline_kernels(const UnitarySchedule& schedule, const MeasurementTimeline& tl) {
    std::vector<StochasticMatrix> out;
    const std::size_t n = tl.count();
    out.reserve(n);
    for (std::size_t k = 1; k <= n; ++k) out.push_back(q_matrix(schedule, tl.sigma(k - 1), tl.gaps[k - 1]));
    return out;
}

// Row i of Q_{σ_0}···Q_{σ_{n_t−1}}·W_{σ_{n_t}} for one timeline.
inline std::vector<double> compound_row(std::size_t i, const UnitarySchedule& schedule, const MeasurementTimeline& tl) {
    const std::size_t m = schedule.dim();
    std::vector<double> v(m, 0.0), next(m);
    v.at(i) = 1.0;
    const std::size_t n = tl.count();
    for (std::size_t k = 1; k <= n; ++k) {
        q_matrix(schedule, tl.sigma(k - 1), tl.gaps[k - 1]).propagate(v, next);
        v.swap(next);
    }
    w_matrix(schedule, tl.last_arrival(), tl.horizon).propagate(v, next);
    return next;
}

struct McEstimate {
    std::vector<double> estimates;
    std::vector<double> stderrs;
    std::uint64_t n_samples{0};
    std::uint64_t seed{0};
};

inline constexpr std::uint64_t kMcBlockSize = 1024;

namespace detail {

struct MomentAccumulator {
    std::uint64_t n{0};
    std::vector<double> mean;
    std::vector<double> m2;

    explicit MomentAccumulator(std::size_t dim) : mean(dim, 0.0), m2(dim, 0.0) {}

    void add(std::span<const double> x) {
        ++n;
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < mean.size(); ++j) {
            const double d = x[j] - mean[j];
            mean[j] += d * inv;
            m2[j] += d * (x[j] - mean[j]);
        }
    }

    // Chan et al. pairwise combination.
    void merge(const MomentAccumulator& o) {
        if (o.n == 0) return;
        const double na = static_cast<double>(n);
        const double nb = static_cast<double>(o.n);
        const double nt = na + nb;
        for (std::size_t j = 0; j < mean.size(); ++j) {
            const double d = o.mean[j] - mean[j];
            mean[j] += d * nb / nt;
            m2[j] += o.m2[j] + d * d * na * nb / nt;
        }
        n += o.n;
    }
};

}  // namespace detail

// Monte Carlo estimate of P_t(i, ·) = E[Q_{σ_0}···Q_{σ_{n_t−1}}W_{σ_{n_t}}(i, ·)].
//
// Samples are grouped in fixed blocks of kMcBlockSize; block b draws from
// rng.substream(b) and blocks are merged in index order, so the result is
// bit-identical for any worker count.
inline McEstimate mc_estimate(std::size_t i, const UnitarySchedule& schedule, const DecoherenceParams& dec,
                              std::uint64_t t, std::uint64_t samples, const RngStream& rng, unsigned workers = 1) {
    if (!(dec.p > 0.0)) throw DomainError("mc_estimate: p must be > 0");
    if (samples < 1) throw DomainError("mc_estimate: need at least one sample");
    const std::size_t m = schedule.dim();
    if (i >= m) throw DomainError("mc_estimate: state index out of range");

    const std::uint64_t blocks = (samples + kMcBlockSize - 1) / kMcBlockSize;
    std::vector<detail::MomentAccumulator> partial(static_cast<std::size_t>(blocks), detail::MomentAccumulator(m));
    std::atomic<std::uint64_t> next_block{0};

    auto worker = [&] {
        for (std::uint64_t b = next_block++; b < blocks; b = next_block++) {
            RngStream local = rng.substream(b);
            const std::uint64_t lo = b * kMcBlockSize;
            const std::uint64_t hi = std::min(samples, lo + kMcBlockSize);
            auto& acc = partial[static_cast<std::size_t>(b)];
            for (std::uint64_t s = lo; s < hi; ++s) {
                const auto tl = sample_timeline(dec.p, t, local);
                acc.add(compound_row(i, schedule, tl));
            }
        }
    };
    workers = std::max(1u, workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    detail::MomentAccumulator total(m);
    for (const auto& part : partial) total.merge(part);

    McEstimate out;
    out.estimates = total.mean;
    out.stderrs.resize(m);
    const double n = static_cast<double>(total.n);
    for (std::size_t j = 0; j < m; ++j) {
        const double var = total.n > 1 ? std::max(0.0, total.m2[j] / (n - 1.0)) : 0.0;
        out.stderrs[j] = std::sqrt(var / n);
    }
    out.n_samples = samples;
    out.seed = rng.seed();
    return out;
}

inline constexpr std::uint64_t kEnumerateMaxSteps = 12;
inline constexpr std::size_t kEnumerateMaxDim = 4;

// Exact P_t(i, ·) by summing over every decoherence-time subset of {1..t},
// each weighted p^n q^{t−n}; intermediate outcomes are summed by chaining
// the segment kernels.
inline std::vector<double> enumerate_paths_row(std::size_t i, const UnitarySchedule& schedule,
                                               const DecoherenceParams& dec, std::uint64_t t) {
    const std::size_t m = schedule.dim();
    if (t > kEnumerateMaxSteps || m > kEnumerateMaxDim)
        throw DomainError("enumerate_paths: instance too large (need t <= 12 and m <= 4)");
    if (i >= m) throw DomainError("enumerate_paths: state index out of range");

    // kernel[a][b] = transition for the coherent stretch U_b···U_{a+1}, a < b <= t
    const auto T = static_cast<std::size_t>(t);
    std::vector<std::vector<std::optional<StochasticMatrix>>> kernel(T + 1, std::vector<std::optional<StochasticMatrix>>(T + 1));
    for (std::size_t a = 0; a <= T; ++a)
        for (std::size_t b = a + 1; b <= T; ++b) kernel[a][b].emplace(transition_from_unitary(schedule.segment(a, b)));

    std::vector<double> total(m, 0.0), v(m), next(m);
    const double p = dec.p;
    const double q = dec.q();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << t); ++mask) {
        const int n = std::popcount(mask);
        const double weight = std::pow(p, n) * std::pow(q, static_cast<double>(t) - n);
        if (weight == 0.0) continue;
        std::fill(v.begin(), v.end(), 0.0);
        v[i] = 1.0;
        std::size_t prev = 0;
        for (std::size_t s = 1; s <= T; ++s) {
            if (!(mask >> (s - 1) & 1U)) continue;
            kernel[prev][s]->propagate(v, next);
            v.swap(next);
            prev = s;
        }
        if (prev < T) {
            kernel[prev][T]->propagate(v, next);
            v.swap(next);
        }
        for (std::size_t j = 0; j < m; ++j) total[j] += weight * v[j];
    }
    return total;
}

inline double enumerate_paths(std::size_t i, std::size_t j, const UnitarySchedule& schedule,
                              const DecoherenceParams& dec, std::uint64_t t) {
    const auto row = enumerate_paths_row(i, schedule, dec, t);
    if (j >= row.size()) throw DomainError("enumerate_paths: state index out of range");
    return row[j];
}

namespace detail {

inline std::size_t sample_categorical(std::span<const double> probs, RngStream& rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] > 0.0) last_positive = k;
        cum += probs[k];
        if (u < cum) return k;
    }
    return last_positive;
}

}  // namespace detail

// Outcomes X_1..X_{n_t} of the measurements, X_0 = i, drawn step by step
// from the rows of the segment kernels.
inline std::vector<std::size_t> sample_outcomes(std::size_t i, const MeasurementTimeline& tl,
                                                const UnitarySchedule& schedule, RngStream& rng) {
    if (i >= schedule.dim()) throw DomainError("sample_outcomes: state index out of range");
    std::vector<std::size_t> path;
    const std::size_t n = tl.count();
    path.reserve(n);
    std::size_t x = i;
    for (std::size_t k = 1; k <= n; ++k) {
        const auto q = q_matrix(schedule, tl.sigma(k - 1), tl.gaps[k - 1]);
        x = detail::sample_categorical(q.row(x), rng);
        path.push_back(x);
    }
    return path;
}

// Q_{σ_0}(i, i_1)···Q_{σ_{n−1}}(i_{n−1}, i_n) given the timeline.
inline double path_probability(std::size_t i, std::span<const std::size_t> path, const MeasurementTimeline& tl,
                               const UnitarySchedule& schedule) {
    if (path.size() > tl.arrivals.size()) throw DomainError("path_probability: path longer than the timeline");
    double prob = 1.0;
    std::size_t x = i;
    for (std::size_t k = 1; k <= path.size(); ++k) {
        prob *= q_matrix(schedule, tl.sigma(k - 1), tl.gaps[k - 1])(x, path[k - 1]);
        x = path[k - 1];
    }
    return prob;
}

// CSV with header `j,estimate,stderr,n_samples,seed`.
inline void write_estimate_csv(std::ostream& os, const McEstimate& est) {
    os << "j,estimate,stderr,n_samples,seed\n";
    for (std::size_t j = 0; j < est.estimates.size(); ++j) {
        os << (j + 1) << ',' << csv::num(est.estimates[j]) << ',' << csv::num(est.stderrs[j]) << ','
           << est.n_samples << ',' << est.seed << '\n';
    }
}

}  // namespace qmc
