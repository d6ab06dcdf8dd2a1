#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace pimax {

// Probability floor applied after every update; keeps all distributions
// strictly positive so log terms are always defined.
inline constexpr double kProbFloor = 1e-6;

inline double log2_safe(double x) { return std::log2(x); }

// Raise entries below the floor and renormalize in place.
inline void floor_and_normalize(std::span<double> v, double floor = kProbFloor) {
    double sum = 0.0;
    for (double& x : v) {
        if (x < floor) x = floor;
        sum += x;
    }
    for (double& x : v) x /= sum;
}

// Strictly positive probability vector on a finite support.
class DiscreteDistribution {
public:
    explicit DiscreteDistribution(std::size_t n)
        : probs_(n, 1.0 / static_cast<double>(n)) {
        if (n < 1) throw std::invalid_argument("DiscreteDistribution: empty support");
    }
    explicit DiscreteDistribution(std::vector<double> p) : probs_(std::move(p)) {
        floor_and_normalize(probs_);
    }

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    std::span<const double> probs() const { return probs_; }
    std::span<double> probs_mutable() { return probs_; }

    void renormalize() { floor_and_normalize(probs_); }

private:
    std::vector<double> probs_;
};

// Joint distribution p(s', s) stored row-major, row index = s'.
class JointTable {
public:
    JointTable(std::size_t n_next, std::size_t n_now)
        : n_next_(n_next), n_now_(n_now), probs_(n_next * n_now, 0.0) {}

    std::size_t n_next() const { return n_next_; }
    std::size_t n_now() const { return n_now_; }

    double& at(std::size_t s_next, std::size_t s_now) {
        return probs_[s_next * n_now_ + s_now];
    }
    double at(std::size_t s_next, std::size_t s_now) const {
        return probs_[s_next * n_now_ + s_now];
    }

    double total() const {
        double t = 0.0;
        for (double x : probs_) t += x;
        return t;
    }

    JointTable transposed() const {
        JointTable out(n_now_, n_next_);
        for (std::size_t i = 0; i < n_next_; ++i)
            for (std::size_t j = 0; j < n_now_; ++j)
                out.at(j, i) = at(i, j);
        return out;
    }

private:
    std::size_t n_next_, n_now_;
    std::vector<double> probs_;
};

// Row-stochastic conditional table with per-row sample counters.
// Rows index the condition, columns the outcome.
class ConditionalTable {
public:
    ConditionalTable(std::size_t n_rows, std::size_t n_cols)
        : n_rows_(n_rows), n_cols_(n_cols),
          probs_(n_rows * n_cols, 1.0 / static_cast<double>(n_cols)),
          counters_(n_rows, 0) {
        if (n_rows < 1 || n_cols < 1)
            throw std::invalid_argument("ConditionalTable: empty shape");
    }

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return n_cols_; }

    std::span<double> row(std::size_t r) {
        return {probs_.data() + r * n_cols_, n_cols_};
    }
    std::span<const double> row(std::size_t r) const {
        return {probs_.data() + r * n_cols_, n_cols_};
    }

    double at(std::size_t r, std::size_t c) const { return probs_[r * n_cols_ + c]; }
    double& at(std::size_t r, std::size_t c) { return probs_[r * n_cols_ + c]; }

    std::uint64_t counter(std::size_t r) const { return counters_[r]; }
    std::uint64_t& counter(std::size_t r) { return counters_[r]; }

    bool same_shape(const ConditionalTable& o) const {
        return n_rows_ == o.n_rows_ && n_cols_ == o.n_cols_;
    }

private:
    std::size_t n_rows_, n_cols_;
    std::vector<double> probs_;
    std::vector<std::uint64_t> counters_;
};

// Uniform binning of [lo, hi] into k equal-width cells, decode to centers.
class Binner {
public:
    explicit Binner(int k, double lo = -1.0, double hi = 1.0)
        : k_(k), lo_(lo), hi_(hi), width_((hi - lo) / k) {
        if (k < 2) throw std::invalid_argument("Binner: need k >= 2");
        if (!(hi > lo)) throw std::invalid_argument("Binner: need hi > lo");
    }

    int k() const { return k_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }

    int encode(double x) const {
        int b = static_cast<int>(std::floor((x - lo_) / width_));
        return std::clamp(b, 0, k_ - 1);
    }

    double decode(int b) const {
        assert(b >= 0 && b < k_);
        return lo_ + (static_cast<double>(b) + 0.5) * width_;
    }

private:
    int k_;
    double lo_, hi_, width_;
};

// H(X) = -sum p log2 p
inline double entropy(const DiscreteDistribution& d) {
    double h = 0.0;
    for (double p : d.probs())
        if (p > 0.0) h -= p * std::log2(p);
    return h;
}

// Entropy of an arbitrary nonnegative weight vector after normalization;
// zero-mass cells are skipped (0 log 0 := 0).
inline double entropy_of_counts(std::span<const double> counts) {
    double total = 0.0;
    for (double c : counts) total += c;
    if (total <= 0.0) throw std::invalid_argument("entropy_of_counts: empty");
    double h = 0.0;
    for (double c : counts) {
        if (c > 0.0) {
            double p = c / total;
            h -= p * std::log2(p);
        }
    }
    return h;
}

// I(S';S) from the joint, marginals taken from the joint itself.
inline double mutual_information(const JointTable& j) {
    std::vector<double> p_now(j.n_now(), 0.0), p_next(j.n_next(), 0.0);
    for (std::size_t sn = 0; sn < j.n_next(); ++sn)
        for (std::size_t s = 0; s < j.n_now(); ++s) {
            p_next[sn] += j.at(sn, s);
            p_now[s] += j.at(sn, s);
        }
    double mi = 0.0;
    for (std::size_t sn = 0; sn < j.n_next(); ++sn)
        for (std::size_t s = 0; s < j.n_now(); ++s) {
            double pj = j.at(sn, s);
            if (pj > 0.0)
                mi += pj * std::log2(pj / (p_next[sn] * p_now[s]));
        }
    return mi;
}

// p(s', s) = sum_a p(s) alpha(a|s) delta(s'|s,a)
// World-model rows are indexed (s, a) -> s * |A| + a.
inline JointTable joint_from_components(const DiscreteDistribution& p,
                                        const ConditionalTable& policy,
                                        const ConditionalTable& model) {
    const std::size_t n_s = p.size();
    const std::size_t n_a = policy.n_cols();
    if (policy.n_rows() != n_s || model.n_rows() != n_s * n_a ||
        model.n_cols() != n_s)
        throw std::invalid_argument("joint_from_components: dimension mismatch");

    JointTable j(n_s, n_s);
    for (std::size_t s = 0; s < n_s; ++s) {
        for (std::size_t a = 0; a < n_a; ++a) {
            const double w = p[s] * policy.at(s, a);
            auto drow = model.row(s * n_a + a);
            for (std::size_t sn = 0; sn < n_s; ++sn)
                j.at(sn, s) += w * drow[sn];
        }
    }
    return j;
}

// One-step predictive information I(S';S) of the (p, alpha, delta) system.
inline double predictive_information(const DiscreteDistribution& p,
                                     const ConditionalTable& policy,
                                     const ConditionalTable& model) {
    return mutual_information(joint_from_components(p, policy, model));
}

// A-posteriori PI of a recorded wheel-velocity series: each wheel is binned
// into binner.k() cells, the pair forms a product state (left wheel is the
// low-order digit), and the empirical joint of consecutive product states
// over the last `window` transitions is evaluated.
inline double empirical_mi_from_series(
    std::span<const std::pair<double, double>> series, const Binner& binner,
    std::size_t window) {
    if (series.size() < window + 1)
        throw std::invalid_argument("empirical_mi_from_series: series shorter than window+1");
    const std::size_t k = static_cast<std::size_t>(binner.k());
    const std::size_t n_states = k * k;
    const std::size_t start = series.size() - (window + 1);

    auto state_of = [&](const std::pair<double, double>& v) {
        return static_cast<std::size_t>(binner.encode(v.first)) +
               k * static_cast<std::size_t>(binner.encode(v.second));
    };

    JointTable j(n_states, n_states);
    std::size_t prev = state_of(series[start]);
    for (std::size_t t = start + 1; t < series.size(); ++t) {
        std::size_t cur = state_of(series[t]);
        j.at(cur, prev) += 1.0 / static_cast<double>(window);
        prev = cur;
    }
    return mutual_information(j);
}

} // namespace pimax
