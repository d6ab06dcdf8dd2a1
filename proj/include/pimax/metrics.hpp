#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pimax/infotheory.hpp"

namespace pimax {

// Visit counters over a 20x20 partition of the arena; tracks the center
// robot's position.
class CoverageGrid {
public:
    static constexpr int kCells = 20;

    CoverageGrid(double width, double height)
        : width_(width), height_(height), counts_(kCells * kCells, 0.0) {}

    void record(double x, double y) {
        int cx = std::clamp(static_cast<int>(x / width_ * kCells), 0, kCells - 1);
        int cy = std::clamp(static_cast<int>(y / height_ * kCells), 0, kCells - 1);
        counts_[static_cast<std::size_t>(cy) * kCells + cx] += 1.0;
        ++total_;
    }

    std::uint64_t total() const { return total_; }
    std::span<const double> counts() const { return counts_; }

private:
    double width_, height_;
    std::vector<double> counts_;
    std::uint64_t total_ = 0;
};

// Entropy of the visit-frequency distribution; <= log2(400) ~ 8.64 bits.
inline double coverage_entropy(const CoverageGrid& grid) {
    if (grid.total() == 0)
        throw std::invalid_argument("coverage_entropy: empty grid");
    return entropy_of_counts(grid.counts());
}

// Time-stamped record of one run, stored column-wise: per-tick positions and
// wheel velocities for every robot, discrete sensor/action per controller,
// and intrinsic PI sampled every pi_stride ticks.
struct RunLog {
    double arena_width = 8.0, arena_height = 8.0;
    std::size_t num_robots = 1;
    std::size_t num_controllers = 1;

    std::vector<std::uint64_t> ticks;           // strictly increasing
    std::vector<double> x, y, heading;          // [tick * num_robots + robot]
    std::vector<double> v_left, v_right;        // [tick * num_robots + robot]
    std::vector<int> sensor_state, action;      // [tick * num_controllers + ctrl]

    std::vector<std::uint64_t> pi_ticks;        // PI sample positions
    std::vector<double> pi_bits;                // [sample * num_controllers + ctrl]

    std::size_t size() const { return ticks.size(); }

    void append_tick(std::uint64_t tick, std::span<const double> xs,
                     std::span<const double> ys, std::span<const double> hs,
                     std::span<const double> vls, std::span<const double> vrs,
                     std::span<const int> sensors, std::span<const int> actions) {
        ticks.push_back(tick);
        x.insert(x.end(), xs.begin(), xs.end());
        y.insert(y.end(), ys.begin(), ys.end());
        heading.insert(heading.end(), hs.begin(), hs.end());
        v_left.insert(v_left.end(), vls.begin(), vls.end());
        v_right.insert(v_right.end(), vrs.begin(), vrs.end());
        sensor_state.insert(sensor_state.end(), sensors.begin(), sensors.end());
        action.insert(action.end(), actions.begin(), actions.end());
    }

    void append_pi(std::uint64_t tick, std::span<const double> bits) {
        pi_ticks.push_back(tick);
        pi_bits.insert(pi_bits.end(), bits.begin(), bits.end());
    }

    std::size_t center_robot() const { return num_robots / 2; }

    std::pair<double, double> wheels(std::size_t tick_idx, std::size_t robot) const {
        const std::size_t i = tick_idx * num_robots + robot;
        return {v_left[i], v_right[i]};
    }
};

// Non-overlapping windows (stride = width) of coverage entropy over the
// center robot's positions.
inline std::vector<std::pair<std::uint64_t, double>> sliding_coverage_entropy(
    const RunLog& log, std::size_t window) {
    if (window == 0 || window > log.size())
        throw std::invalid_argument("sliding_coverage_entropy: bad window");
    const std::size_t center = log.center_robot();
    std::vector<std::pair<std::uint64_t, double>> out;
    for (std::size_t start = 0; start + window <= log.size(); start += window) {
        CoverageGrid grid(log.arena_width, log.arena_height);
        for (std::size_t t = start; t < start + window; ++t) {
            const std::size_t i = t * log.num_robots + center;
            grid.record(log.x[i], log.y[i]);
        }
        out.emplace_back(log.ticks[start], coverage_entropy(grid));
    }
    return out;
}

struct PiTimeSeries {
    std::vector<std::uint64_t> ticks;
    std::vector<std::vector<double>> per_controller; // [sample][controller]
    std::vector<double> average;                     // [sample]
};

inline PiTimeSeries pi_timeseries(const RunLog& log) {
    PiTimeSeries out;
    const std::size_t nc = log.num_controllers;
    for (std::size_t s = 0; s < log.pi_ticks.size(); ++s) {
        out.ticks.push_back(log.pi_ticks[s]);
        std::vector<double> row(log.pi_bits.begin() + s * nc,
                                log.pi_bits.begin() + (s + 1) * nc);
        double sum = 0.0;
        for (double v : row) sum += v;
        out.average.push_back(sum / static_cast<double>(nc));
        out.per_controller.push_back(std::move(row));
    }
    return out;
}

// --- CSV emission --------------------------------------------------------

namespace detail {
inline std::ofstream open_csv(const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << std::setprecision(17);
    return f;
}
} // namespace detail

inline void write_trajectory_csv(const RunLog& log, const std::filesystem::path& p) {
    auto f = detail::open_csv(p);
    f << "tick,robot_index,x,y,heading\n";
    for (std::size_t t = 0; t < log.size(); ++t)
        for (std::size_t i = 0; i < log.num_robots; ++i) {
            const std::size_t k = t * log.num_robots + i;
            f << log.ticks[t] << ',' << i << ',' << log.x[k] << ',' << log.y[k]
              << ',' << log.heading[k] << '\n';
        }
}

inline void write_wheels_csv(const RunLog& log, const std::filesystem::path& p) {
    auto f = detail::open_csv(p);
    f << "tick,robot_index,v_left,v_right\n";
    for (std::size_t t = 0; t < log.size(); ++t)
        for (std::size_t i = 0; i < log.num_robots; ++i) {
            const std::size_t k = t * log.num_robots + i;
            f << log.ticks[t] << ',' << i << ',' << log.v_left[k] << ','
              << log.v_right[k] << '\n';
        }
}

inline void write_pi_csv(const RunLog& log, const std::filesystem::path& p) {
    auto f = detail::open_csv(p);
    f << "tick,controller_index,pi_bits\n";
    for (std::size_t s = 0; s < log.pi_ticks.size(); ++s)
        for (std::size_t i = 0; i < log.num_controllers; ++i)
            f << log.pi_ticks[s] << ',' << i << ','
              << log.pi_bits[s * log.num_controllers + i] << '\n';
}

inline void write_coverage_csv(const CoverageGrid& grid, const std::filesystem::path& p) {
    auto f = detail::open_csv(p);
    f << "patch_x,patch_y,count\n";
    auto counts = grid.counts();
    for (int y = 0; y < CoverageGrid::kCells; ++y)
        for (int x = 0; x < CoverageGrid::kCells; ++x)
            f << x << ',' << y << ','
              << counts[static_cast<std::size_t>(y) * CoverageGrid::kCells + x]
              << '\n';
}

inline void write_sliding_csv(
    const std::vector<std::pair<std::uint64_t, double>>& series,
    const std::filesystem::path& p) {
    auto f = detail::open_csv(p);
    f << "window_start_tick,entropy_bits\n";
    for (const auto& [tick, bits] : series) f << tick << ',' << bits << '\n';
}

inline void write_run_log(const RunLog& log, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_trajectory_csv(log, dir / "trajectory.csv");
    write_wheels_csv(log, dir / "wheels.csv");
    write_pi_csv(log, dir / "pi.csv");
}

// Inverse of write_run_log; used by `analyze` and by the round-trip test.
inline RunLog read_run_log(const std::filesystem::path& dir) {
    RunLog log;
    auto open = [](const std::filesystem::path& p) {
        std::ifstream f(p);
        if (!f) throw std::runtime_error("cannot read " + p.string());
        std::string header;
        std::getline(f, header);
        return f;
    };
    {
        auto f = open(dir / "trajectory.csv");
        std::uint64_t tick;
        std::size_t idx;
        double x, y, h;
        char c;
        std::size_t max_idx = 0;
        while (f >> tick >> c >> idx >> c >> x >> c >> y >> c >> h) {
            if (log.ticks.empty() || log.ticks.back() != tick)
                log.ticks.push_back(tick);
            log.x.push_back(x);
            log.y.push_back(y);
            log.heading.push_back(h);
            max_idx = std::max(max_idx, idx);
        }
        log.num_robots = max_idx + 1;
    }
    {
        auto f = open(dir / "wheels.csv");
        std::uint64_t tick;
        std::size_t idx;
        double vl, vr;
        char c;
        while (f >> tick >> c >> idx >> c >> vl >> c >> vr) {
            log.v_left.push_back(vl);
            log.v_right.push_back(vr);
        }
    }
    if (std::filesystem::exists(dir / "pi.csv")) {
        auto f = open(dir / "pi.csv");
        std::uint64_t tick;
        std::size_t idx;
        double pi;
        char c;
        std::size_t max_idx = 0;
        while (f >> tick >> c >> idx >> c >> pi) {
            if (log.pi_ticks.empty() || log.pi_ticks.back() != tick)
                log.pi_ticks.push_back(tick);
            log.pi_bits.push_back(pi);
            max_idx = std::max(max_idx, idx);
        }
        log.num_controllers = log.pi_ticks.empty() ? log.num_robots : max_idx + 1;
    }
    return log;
}

} // namespace pimax
