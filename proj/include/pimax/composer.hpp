#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pimax/learner.hpp"

namespace pimax {

// Index split for product states/actions: the left factor is the low-order
// digit. Must match the state fusion used by the combined controller at
// runtime.
struct ProductIndex {
    std::size_t base;
    std::size_t left(std::size_t combined) const { return combined % base; }
    std::size_t right(std::size_t combined) const { return combined / base; }
    std::size_t fuse(std::size_t l, std::size_t r) const { return l + base * r; }
};

// alpha_c(a_c | s_c) = alpha_l(a_l | s_l) * alpha_r(a_r | s_r)
inline ConditionalTable combine_split_policies(const ConditionalTable& left,
                                               const ConditionalTable& right) {
    if (!left.same_shape(right))
        throw std::invalid_argument("combine_split_policies: shape mismatch");
    const std::size_t n_s = left.n_rows();
    const std::size_t n_a = left.n_cols();
    ProductIndex si{n_s}, ai{n_a};
    ConditionalTable out(n_s * n_s, n_a * n_a);
    for (std::size_t sc = 0; sc < n_s * n_s; ++sc) {
        for (std::size_t ac = 0; ac < n_a * n_a; ++ac)
            out.at(sc, ac) = left.at(si.left(sc), ai.left(ac)) *
                             right.at(si.right(sc), ai.right(ac));
        out.counter(sc) = std::min(left.counter(si.left(sc)),
                                   right.counter(si.right(sc)));
    }
    return out;
}

inline DiscreteDistribution combine_sensor_distributions(
    const DiscreteDistribution& left, const DiscreteDistribution& right) {
    if (left.size() != right.size())
        throw std::invalid_argument("combine_sensor_distributions: size mismatch");
    ProductIndex si{left.size()};
    std::vector<double> p(left.size() * right.size());
    for (std::size_t sc = 0; sc < p.size(); ++sc)
        p[sc] = left[si.left(sc)] * right[si.right(sc)];
    return DiscreteDistribution(std::move(p));
}

// delta_c(s'_c | s_c, a_c) = delta_l(s'_l | s_l, a_l) * delta_r(s'_r | s_r, a_r)
// Row index convention: (s, a) -> s * |A| + a on both sides.
inline ConditionalTable combine_world_models(const ConditionalTable& left,
                                             const ConditionalTable& right,
                                             std::size_t n_s, std::size_t n_a) {
    if (!left.same_shape(right) || left.n_rows() != n_s * n_a ||
        left.n_cols() != n_s)
        throw std::invalid_argument("combine_world_models: shape mismatch");
    ProductIndex si{n_s}, ai{n_a};
    const std::size_t n_sc = n_s * n_s;
    const std::size_t n_ac = n_a * n_a;
    ConditionalTable out(n_sc * n_ac, n_sc);
    for (std::size_t sc = 0; sc < n_sc; ++sc)
        for (std::size_t ac = 0; ac < n_ac; ++ac) {
            const std::size_t rl = si.left(sc) * n_a + ai.left(ac);
            const std::size_t rr = si.right(sc) * n_a + ai.right(ac);
            const std::size_t rc = sc * n_ac + ac;
            for (std::size_t snc = 0; snc < n_sc; ++snc)
                out.at(rc, snc) =
                    left.at(rl, si.left(snc)) * right.at(rr, si.right(snc));
            out.counter(rc) = std::min(left.counter(rl), right.counter(rr));
        }
    return out;
}

// Full learner composition for the split-to-combined experiment. Counters
// carry over as per-row minima so post-composition learning rates stay low.
inline LearnerState combine_learners(const LearnerState& left,
                                     const LearnerState& right) {
    if (left.num_sensors() != right.num_sensors() ||
        left.num_actions() != right.num_actions())
        throw std::invalid_argument("combine_learners: shape mismatch");
    const std::size_t n_s = left.num_sensors();
    const std::size_t n_a = left.num_actions();
    LearnerState out(n_s * n_s, n_a * n_a);
    out.policy() = combine_split_policies(left.policy(), right.policy());
    out.world_model() =
        combine_world_models(left.world_model(), right.world_model(), n_s, n_a);
    {
        auto combined = combine_sensor_distributions(left.sensor_dist(),
                                                     right.sensor_dist());
        auto dst = out.sensor_dist().probs_mutable();
        auto src = combined.probs();
        std::copy(src.begin(), src.end(), dst.begin());
    }
    out.set_step_count(std::min(left.step_count(), right.step_count()));
    out.set_sensor_count(std::min(left.sensor_count(), right.sensor_count()));
    return out;
}

// 8-bin policy from a 4-bin policy: each source row is used for both child
// sensor rows and each source action's mass splits equally over its two
// child actions, so rows stay normalized. Only the doubling case is
// supported.
inline ConditionalTable upsample_policy(const ConditionalTable& p4, int factor) {
    if (factor != 2)
        throw std::invalid_argument("upsample_policy: only factor 2 is supported");
    ConditionalTable out(p4.n_rows() * 2, p4.n_cols() * 2);
    for (std::size_t j = 0; j < out.n_rows(); ++j) {
        for (std::size_t i = 0; i < out.n_cols(); ++i)
            out.at(j, i) = 0.5 * p4.at(j / 2, i / 2);
        out.counter(j) = p4.counter(j / 2);
    }
    return out;
}

// Elementwise L2 distance over all cells.
inline double policy_distance(const ConditionalTable& a,
                              const ConditionalTable& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("policy_distance: shape mismatch");
    double acc = 0.0;
    for (std::size_t r = 0; r < a.n_rows(); ++r)
        for (std::size_t c = 0; c < a.n_cols(); ++c) {
            const double d = a.at(r, c) - b.at(r, c);
            acc += d * d;
        }
    return std::sqrt(acc);
}

} // namespace pimax
