#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pimax/infotheory.hpp"
#include "pimax/rng.hpp"

namespace pimax {

// Policy learning-rate schedule. `reciprocal` is 1/(n+1); `floor` never lets
// the rate decay below a constant; `warmup` holds the rate constant for the
// first K steps. The variants exist for rate-robustness experiments and do
// not change outcomes in practice.
struct RateSchedule {
    enum class Kind { Reciprocal, Floor, Warmup };
    Kind kind = Kind::Reciprocal;
    double floor_value = 0.0;   // for Floor
    std::uint64_t warmup_steps = 0; // for Warmup

    double rate(std::uint64_t n) const {
        double base = 1.0 / static_cast<double>(n + 1);
        switch (kind) {
        case Kind::Reciprocal: return base;
        case Kind::Floor: return std::max(base, floor_value);
        case Kind::Warmup:
            return n < warmup_steps
                       ? 1.0 / static_cast<double>(warmup_steps + 1)
                       : base;
        }
        return base;
    }

    static RateSchedule parse(const std::string& s);
    std::string to_string() const;
};

inline RateSchedule RateSchedule::parse(const std::string& s) {
    RateSchedule r;
    if (s == "reciprocal") return r;
    if (s.rfind("floor:", 0) == 0) {
        r.kind = Kind::Floor;
        r.floor_value = std::stod(s.substr(6));
        return r;
    }
    if (s.rfind("warmup:", 0) == 0) {
        r.kind = Kind::Warmup;
        r.warmup_steps = std::stoull(s.substr(7));
        return r;
    }
    throw std::invalid_argument("unknown rate schedule: " + s);
}

inline std::string RateSchedule::to_string() const {
    switch (kind) {
    case Kind::Reciprocal: return "reciprocal";
    case Kind::Floor: {
        std::ostringstream os;
        os << "floor:" << floor_value;
        return os.str();
    }
    case Kind::Warmup: return "warmup:" + std::to_string(warmup_steps);
    }
    return "reciprocal";
}

// Tabular PI-maximizing learner: empirical sensor distribution p(s),
// world model delta(s'|s,a) with per-(s,a) counters, and policy alpha(a|s)
// driven by the natural gradient of I(S';S).
class LearnerState {
public:
    LearnerState(std::size_t num_sensors, std::size_t num_actions)
        : n_s_(num_sensors), n_a_(num_actions),
          sensor_dist_(num_sensors),
          world_model_(num_sensors * num_actions, num_sensors),
          policy_(num_sensors, num_actions) {
        if (num_sensors < 2 || num_actions < 2)
            throw std::invalid_argument("LearnerState: need >= 2 sensors and actions");
    }

    std::size_t num_sensors() const { return n_s_; }
    std::size_t num_actions() const { return n_a_; }
    const DiscreteDistribution& sensor_dist() const { return sensor_dist_; }
    const ConditionalTable& world_model() const { return world_model_; }
    const ConditionalTable& policy() const { return policy_; }
    DiscreteDistribution& sensor_dist() { return sensor_dist_; }
    ConditionalTable& world_model() { return world_model_; }
    ConditionalTable& policy() { return policy_; }

    std::uint64_t step_count() const { return n_; }
    std::uint64_t sensor_count() const { return sensor_count_; }
    void set_step_count(std::uint64_t n) { n_ = n; }
    void set_sensor_count(std::uint64_t c) { sensor_count_ = c; }

    std::optional<int> prev_sensor() const { return prev_sensor_; }
    void set_prev_sensor(std::optional<int> s) { prev_sensor_ = s; }

    // p(s) <- c/(c+1) p(s) + 1/(c+1) [s = observed]. The uniform init carries
    // one pseudo-count, so the first observation uses rate 1/2.
    void update_sensor_distribution(int observed_s) {
        auto p = sensor_dist_.probs_mutable();
        const double c = static_cast<double>(sensor_count_);
        const double keep = c / (c + 1.0);
        for (double& x : p) x *= keep;
        p[static_cast<std::size_t>(observed_s)] += 1.0 / (c + 1.0);
        floor_and_normalize(p);
        ++sensor_count_;
    }

    // Only the (s, a) row of the world model moves; its counter increments.
    void update_world_model(int s, int a, int s_next) {
        const std::size_t r = row_index(s, a);
        const double c = static_cast<double>(world_model_.counter(r)) + 1.0;
        auto row = world_model_.row(r);
        const double keep = c / (c + 1.0);
        for (double& x : row) x *= keep;
        row[static_cast<std::size_t>(s_next)] += 1.0 / (c + 1.0);
        floor_and_normalize(row);
        ++world_model_.counter(r);
    }

    // F(s,a) = p(s) sum_{s'} delta(s'|s,a) log2[ q(s'|s) / m(s') ], with
    // q(s'|s) = sum_a alpha(a|s) delta(s'|s,a) and m(s') = sum_s p(s) q(s'|s).
    // p(s) is held fixed; its dependence on the policy is not modeled.
    std::vector<double> policy_gradient() const {
        std::vector<double> q(n_s_ * n_s_, 0.0); // q[s * n_s + s']
        for (std::size_t s = 0; s < n_s_; ++s)
            for (std::size_t a = 0; a < n_a_; ++a) {
                const double w = policy_.at(s, a);
                auto drow = world_model_.row(s * n_a_ + a);
                for (std::size_t sn = 0; sn < n_s_; ++sn)
                    q[s * n_s_ + sn] += w * drow[sn];
            }
        std::vector<double> m(n_s_, 0.0);
        for (std::size_t s = 0; s < n_s_; ++s)
            for (std::size_t sn = 0; sn < n_s_; ++sn)
                m[sn] += sensor_dist_[s] * q[s * n_s_ + sn];

        std::vector<double> log_ratio(n_s_ * n_s_);
        for (std::size_t s = 0; s < n_s_; ++s)
            for (std::size_t sn = 0; sn < n_s_; ++sn)
                log_ratio[s * n_s_ + sn] = std::log2(q[s * n_s_ + sn] / m[sn]);

        std::vector<double> grad(n_s_ * n_a_, 0.0);
        for (std::size_t s = 0; s < n_s_; ++s)
            for (std::size_t a = 0; a < n_a_; ++a) {
                auto drow = world_model_.row(s * n_a_ + a);
                double acc = 0.0;
                for (std::size_t sn = 0; sn < n_s_; ++sn)
                    acc += drow[sn] * log_ratio[s * n_s_ + sn];
                grad[s * n_a_ + a] = sensor_dist_[s] * acc;
            }
        return grad;
    }

    // Replicator step on every policy row, then floor projection.
    void update_policy(const RateSchedule& schedule = {}) {
        const auto grad = policy_gradient();
        const double rate = schedule.rate(n_);
        for (std::size_t s = 0; s < n_s_; ++s) {
            auto row = policy_.row(s);
            double mean_f = 0.0;
            for (std::size_t a = 0; a < n_a_; ++a)
                mean_f += row[a] * grad[s * n_a_ + a];
            for (std::size_t a = 0; a < n_a_; ++a)
                row[a] += rate * row[a] * (grad[s * n_a_ + a] - mean_f);
            floor_and_normalize(row);
        }
    }

    int sample_action(int s, Rng& rng) const {
        return rng.sample(policy_.row(static_cast<std::size_t>(s)));
    }

    // One control tick: sample p(s), adjust the touched world-model row,
    // take a policy gradient step, advance n.
    void learning_step(int s_prev, int a_prev, int s_now,
                       const RateSchedule& schedule = {}) {
        update_sensor_distribution(s_now);
        update_world_model(s_prev, a_prev, s_now);
        update_policy(schedule);
        ++n_;
    }

    double intrinsic_pi() const {
        return predictive_information(sensor_dist_, policy_, world_model_);
    }

    std::size_t row_index(int s, int a) const {
        return static_cast<std::size_t>(s) * n_a_ + static_cast<std::size_t>(a);
    }

private:
    std::size_t n_s_, n_a_;
    DiscreteDistribution sensor_dist_;
    ConditionalTable world_model_;
    ConditionalTable policy_;
    std::uint64_t n_ = 0;
    std::uint64_t sensor_count_ = 1; // uniform prior counts as one sample
    std::optional<int> prev_sensor_;
};

// --- plain-text serialization -------------------------------------------
//
//   table <n_rows> <n_cols>
//   <row of n_cols floats>          (x n_rows, >= 12 significant digits)
//   counters <n>
//   <n counts>

inline void write_table(std::ostream& os, const ConditionalTable& t) {
    os << "table " << t.n_rows() << ' ' << t.n_cols() << '\n';
    os << std::setprecision(17);
    for (std::size_t r = 0; r < t.n_rows(); ++r) {
        auto row = t.row(r);
        for (std::size_t c = 0; c < t.n_cols(); ++c)
            os << (c ? " " : "") << row[c];
        os << '\n';
    }
    os << "counters " << t.n_rows() << '\n';
    for (std::size_t r = 0; r < t.n_rows(); ++r)
        os << (r ? " " : "") << t.counter(r);
    os << '\n';
}

inline ConditionalTable read_table(std::istream& is) {
    std::string tag;
    std::size_t n_rows = 0, n_cols = 0;
    is >> tag >> n_rows >> n_cols;
    if (tag != "table" || !is)
        throw std::runtime_error("read_table: bad header");
    ConditionalTable t(n_rows, n_cols);
    for (std::size_t r = 0; r < n_rows; ++r) {
        auto row = t.row(r);
        for (std::size_t c = 0; c < n_cols; ++c)
            if (!(is >> row[c]))
                throw std::runtime_error("read_table: truncated rows");
    }
    std::size_t n_counters = 0;
    is >> tag >> n_counters;
    if (tag != "counters" || n_counters != n_rows)
        throw std::runtime_error("read_table: bad counters block");
    for (std::size_t r = 0; r < n_rows; ++r)
        if (!(is >> t.counter(r)))
            throw std::runtime_error("read_table: truncated counters");
    return t;
}

// A learner is stored as a directory of three table files plus a meta file.
inline void save_learner(const LearnerState& st, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name);
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        return f;
    };
    {
        auto f = open("policy.txt");
        write_table(f, st.policy());
    }
    {
        auto f = open("model.txt");
        write_table(f, st.world_model());
    }
    {
        // sensor distribution as a 1-row table; its counter is the sample count
        ConditionalTable p(1, st.num_sensors());
        auto row = p.row(0);
        for (std::size_t i = 0; i < st.num_sensors(); ++i)
            row[i] = st.sensor_dist()[i];
        p.counter(0) = st.sensor_count();
        auto f = open("sensor.txt");
        write_table(f, p);
    }
    {
        auto f = open("meta.txt");
        f << "num_sensors " << st.num_sensors() << '\n'
          << "num_actions " << st.num_actions() << '\n'
          << "step_count " << st.step_count() << '\n';
    }
}

inline LearnerState load_learner(const std::filesystem::path& dir) {
    auto open = [&](const char* name) {
        std::ifstream f(dir / name);
        if (!f) throw std::runtime_error("cannot read " + (dir / name).string());
        return f;
    };
    std::size_t n_s = 0, n_a = 0;
    std::uint64_t steps = 0;
    {
        auto f = open("meta.txt");
        std::string key;
        while (f >> key) {
            if (key == "num_sensors") f >> n_s;
            else if (key == "num_actions") f >> n_a;
            else if (key == "step_count") f >> steps;
            else { std::string skip; f >> skip; }
        }
    }
    LearnerState st(n_s, n_a);
    st.set_step_count(steps);
    {
        auto f = open("policy.txt");
        st.policy() = read_table(f);
    }
    {
        auto f = open("model.txt");
        st.world_model() = read_table(f);
    }
    {
        auto f = open("sensor.txt");
        ConditionalTable p = read_table(f);
        if (p.n_rows() != 1 || p.n_cols() != n_s)
            throw std::runtime_error("load_learner: sensor table shape mismatch");
        auto src = p.row(0);
        auto dst = st.sensor_dist().probs_mutable();
        std::copy(src.begin(), src.end(), dst.begin());
        st.set_sensor_count(p.counter(0));
    }
    if (st.policy().n_rows() != n_s || st.policy().n_cols() != n_a ||
        st.world_model().n_rows() != n_s * n_a || st.world_model().n_cols() != n_s)
        throw std::runtime_error("load_learner: table shapes inconsistent with meta");
    return st;
}

} // namespace pimax
