#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pimax {

// Kinematic stand-in for the original physics setup. The learning mechanism
// needs two physical effects: desired wheel speeds are reached with lag, and
// chain neighbors drag each other through the hinge coupling. Both are
// modeled explicitly; rigid-body dynamics are not.
struct SimParams {
    double wheel_lag = 0.5;        // max change of a wheel value per tick (slew limit)
    double v_max = 0.3;            // m/s at wheel value +-1
    double robot_radius = 0.05;    // m (10 cm diameter)
    double link_gap = 0.02;        // m between neighboring bodies
    double hinge_limit = 0.9;      // rad, max relative heading of neighbors
    double coupling_mix = 0.04;    // fraction of along-link speed mismatch averaged per sweep
    double spin_mix = 0.06;        // fraction of neighbor spin mismatch averaged per sweep
    double heading_align = 0.2;    // fraction of body-axis-to-link misalignment removed per sweep
    double back_drive = 0.0;       // fraction of constraint displacement fed back into wheel values
    int constraint_sweeps = 20;
    double dt = 0.1;               // s (10 Hz control)

    double link_length() const { return 2.0 * robot_radius + link_gap; }
};

struct ArenaConfig {
    double width = 8.0;  // m
    double height = 8.0; // m
};

struct RobotBody {
    double x = 0.0, y = 0.0; // m
    double heading = 0.0;    // rad
    double v_left = 0.0, v_right = 0.0; // normalized wheel velocities in [-1,1]
};

struct ChainState {
    std::vector<RobotBody> bodies;
    ArenaConfig arena;
    SimParams params;
};

namespace detail {

inline double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

inline double wrap_angle(double a) {
    while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
    while (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
    return a;
}

} // namespace detail

// Collinear layout with the center robot at the arena center, all headings
// equal, wheels at rest.
inline ChainState init_chain(int r, const ArenaConfig& arena = {},
                             const SimParams& params = {}) {
    if (r < 1) throw std::invalid_argument("init_chain: need at least one robot");
    const double chain_extent =
        (r - 1) * params.link_length() + 2.0 * params.robot_radius;
    if (chain_extent >= arena.width || chain_extent >= arena.height)
        throw std::invalid_argument("init_chain: chain longer than arena");

    ChainState chain;
    chain.arena = arena;
    chain.params = params;
    chain.bodies.resize(static_cast<std::size_t>(r));
    const double cx = arena.width / 2.0, cy = arena.height / 2.0;
    const double mid = (r - 1) / 2.0;
    for (int i = 0; i < r; ++i) {
        chain.bodies[static_cast<std::size_t>(i)].x =
            cx + (i - mid) * params.link_length();
        chain.bodies[static_cast<std::size_t>(i)].y = cy;
    }
    return chain;
}

// The sensors are the actual wheel velocities, nothing else, no added noise.
inline std::vector<std::pair<double, double>> read_sensors(const ChainState& c) {
    std::vector<std::pair<double, double>> out;
    out.reserve(c.bodies.size());
    for (const auto& b : c.bodies) out.emplace_back(b.v_left, b.v_right);
    return out;
}

// One 10 Hz tick: wheel lag, differential-drive integration, chain
// constraint projection, wall resolution.
inline void step(ChainState& chain,
                 const std::vector<std::pair<double, double>>& desired) {
    if (desired.size() != chain.bodies.size())
        throw std::invalid_argument("step: one desired pair per robot required");
    const SimParams& p = chain.params;
    const double track = 2.0 * p.robot_radius;

    // 1. wheel lag: rate-limited approach toward the desired speed. The
    // wheel moves at most `wheel_lag` per tick and snaps exactly onto the
    // target once within reach, so a full reversal takes several ticks.
    auto approach = [&](double v, double d) {
        d = detail::clamp_unit(d);
        const double delta = std::clamp(d - v, -p.wheel_lag, p.wheel_lag);
        return detail::clamp_unit(v + delta);
    };
    for (std::size_t i = 0; i < chain.bodies.size(); ++i) {
        auto& b = chain.bodies[i];
        b.v_left = approach(b.v_left, desired[i].first);
        b.v_right = approach(b.v_right, desired[i].second);
    }

    // 2. differential-drive kinematics
    for (auto& b : chain.bodies) {
        const double lin = p.v_max * (b.v_left + b.v_right) / 2.0;
        const double ang = p.v_max * (b.v_right - b.v_left) / track;
        b.x += lin * std::cos(b.heading) * p.dt;
        b.y += lin * std::sin(b.heading) * p.dt;
        b.heading = detail::wrap_angle(b.heading + ang * p.dt);
    }

    // 3. chain constraint projection
    const double link = p.link_length();
    std::vector<std::pair<double, double>> pre_projection;
    pre_projection.reserve(chain.bodies.size());
    for (const auto& b : chain.bodies) pre_projection.emplace_back(b.x, b.y);
    for (int sweep = 0; sweep < p.constraint_sweeps; ++sweep) {
        double worst = 0.0;
        for (std::size_t i = 0; i + 1 < chain.bodies.size(); ++i) {
            auto& a = chain.bodies[i];
            auto& b = chain.bodies[i + 1];
            double dx = b.x - a.x, dy = b.y - a.y;
            double dist = std::hypot(dx, dy);
            if (dist < 1e-12) { dx = link; dy = 0.0; dist = link; }
            const double ux = dx / dist, uy = dy / dist;

            // restore the link separation, half the correction on each body
            const double err = dist - link;
            a.x += 0.5 * err * ux;
            a.y += 0.5 * err * uy;
            b.x -= 0.5 * err * ux;
            b.y -= 0.5 * err * uy;
            worst = std::max(worst, std::abs(err));

            // damp the wheel-speed component that fights the link: average a
            // fraction of the along-link speed mismatch between the two
            // bodies, so an uncoordinated segment drags its neighbors
            const double ca = std::cos(a.heading) * ux + std::sin(a.heading) * uy;
            const double cb = std::cos(b.heading) * ux + std::sin(b.heading) * uy;
            const double sa = (a.v_left + a.v_right) / 2.0;
            const double sb = (b.v_left + b.v_right) / 2.0;
            const double mismatch = sb * cb - sa * ca; // along-link, wheel units
            const double transfer = 0.5 * p.coupling_mix * mismatch;
            if (std::abs(ca) > 0.1) {
                const double d = transfer / ca;
                a.v_left = detail::clamp_unit(a.v_left + d);
                a.v_right = detail::clamp_unit(a.v_right + d);
            }
            if (std::abs(cb) > 0.1) {
                const double d = -transfer / cb;
                b.v_left = detail::clamp_unit(b.v_left + d);
                b.v_right = detail::clamp_unit(b.v_right + d);
            }

            // the hinge also resists relative spin: average part of the
            // wheel-differential mismatch (turn rate does not depend on
            // which way a body faces along the chain, so no sign flip)
            if (p.spin_mix > 0.0) {
                const double da = (a.v_right - a.v_left) / 2.0;
                const double db = (b.v_right - b.v_left) / 2.0;
                const double t = 0.5 * p.spin_mix * (db - da);
                a.v_right = detail::clamp_unit(a.v_right + t);
                a.v_left = detail::clamp_unit(a.v_left - t);
                b.v_right = detail::clamp_unit(b.v_right - t);
                b.v_left = detail::clamp_unit(b.v_left + t);
            }

            // the hinge transmits no sideways motion: pull each body's axis
            // toward the link axis (mod pi, so a body may face either way
            // along the chain)
            const double axis = std::atan2(uy, ux);
            auto align = [&](double heading) {
                double d = detail::wrap_angle(heading - axis);
                if (d > std::numbers::pi / 2.0) d -= std::numbers::pi;
                if (d < -std::numbers::pi / 2.0) d += std::numbers::pi;
                return detail::wrap_angle(heading - p.heading_align * d);
            };
            a.heading = align(a.heading);
            b.heading = align(b.heading);

            // hinge limit on the relative heading
            const double rel = detail::wrap_angle(b.heading - a.heading);
            if (std::abs(rel) > p.hinge_limit) {
                const double excess = (std::abs(rel) - p.hinge_limit) *
                                      (rel > 0.0 ? 1.0 : -1.0);
                a.heading = detail::wrap_angle(a.heading + 0.5 * excess);
                b.heading = detail::wrap_angle(b.heading - 0.5 * excess);
            }
        }
        if (worst < 1e-9 && chain.bodies.size() > 1 && sweep > 0) break;
        if (chain.bodies.size() < 2) break;
    }

    // 3a. hinge relaxation: the per-pair clamp inside the sweeps can be
    // disturbed by later pairs (they share a body), so iterate the clamp
    // alone until every relative heading is within the limit
    for (int it = 0; it < 50 && chain.bodies.size() > 1; ++it) {
        double worst = 0.0;
        for (std::size_t i = 0; i + 1 < chain.bodies.size(); ++i) {
            auto& a = chain.bodies[i];
            auto& b = chain.bodies[i + 1];
            const double rel = detail::wrap_angle(b.heading - a.heading);
            if (std::abs(rel) > p.hinge_limit) {
                const double excess = (std::abs(rel) - p.hinge_limit) *
                                      (rel > 0.0 ? 1.0 : -1.0);
                a.heading = detail::wrap_angle(a.heading + 0.5 * excess);
                b.heading = detail::wrap_angle(b.heading - 0.5 * excess);
                worst = std::max(worst, std::abs(excess));
            }
        }
        if (worst < 1e-9) break;
    }

    // 3b. wheel back-drive: the ground enforces the constrained motion, so
    // the displacement the projection added or removed shows up in the wheel
    // velocities — a dragged robot's wheels spin, a blocked robot's stall
    if (p.back_drive > 0.0 && chain.bodies.size() > 1) {
        for (std::size_t i = 0; i < chain.bodies.size(); ++i) {
            auto& b = chain.bodies[i];
            const double dx = b.x - pre_projection[i].first;
            const double dy = b.y - pre_projection[i].second;
            const double dlin =
                (dx * std::cos(b.heading) + dy * std::sin(b.heading)) /
                (p.v_max * p.dt);
            const double d = p.back_drive * dlin;
            b.v_left = detail::clamp_unit(b.v_left + d);
            b.v_right = detail::clamp_unit(b.v_right + d);
        }
    }

    // 4. wall resolution: the per-axis position clamp zeroes the outward
    // component of the body velocity and keeps the tangential one (the
    // robot slides along the wall, wheels slipping); wheel values are a
    // motion command reading, not a ground-contact odometer, so they are
    // left untouched
    for (auto& b : chain.bodies) {
        const double r = p.robot_radius;
        b.x = std::clamp(b.x, r, chain.arena.width - r);
        b.y = std::clamp(b.y, r, chain.arena.height - r);
        if (!std::isfinite(b.x) || !std::isfinite(b.y) ||
            !std::isfinite(b.heading) || !std::isfinite(b.v_left) ||
            !std::isfinite(b.v_right))
            throw std::runtime_error("step: non-finite simulation state");
    }
}

} // namespace pimax
