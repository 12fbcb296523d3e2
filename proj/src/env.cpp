#include "faopd/env.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

namespace faopd {

namespace {

std::atomic<std::uint64_t> g_diag_reads{0};

// Entry parameter of segment p + t*(q-p) into the open interior of w, or
// +inf when the segment never enters. Standard slab clipping.
double entry_param(const RectWall& w, const Vec2& p, const Vec2& q) {
    const double dx = q.x - p.x, dy = q.y - p.y;
    double t_lo = 0.0, t_hi = 1.0;

    auto clip_axis = [&](double start, double d, double lo, double hi) {
        if (d == 0.0) return start > lo && start < hi;
        double t1 = (lo - start) / d;
        double t2 = (hi - start) / d;
        if (t1 > t2) std::swap(t1, t2);
        t_lo = std::max(t_lo, t1);
        t_hi = std::min(t_hi, t2);
        return t_lo < t_hi;
    };

    if (!clip_axis(p.x, dx, w.x0, w.x1)) return std::numeric_limits<double>::infinity();
    if (!clip_axis(p.y, dy, w.y0, w.y1)) return std::numeric_limits<double>::infinity();
    if (!(t_lo < t_hi)) return std::numeric_limits<double>::infinity();
    return t_lo;
}

}  // namespace

std::uint64_t diag_reward_reads() { return g_diag_reads.load(); }
void reset_diag_reward_reads() { g_diag_reads.store(0); }
void Transition::bump_diag_counter() { g_diag_reads.fetch_add(1); }

EnvSpec EnvSpec::make(std::string_view name) {
    EnvSpec s;
    s.name = std::string(name);
    if (name == "open") {
        s.start_region = {0.05, 0.05, 0.95, 0.95};
        s.goal_region = {0.05, 0.05, 0.95, 0.95};
        s.routes = {{}};
    } else if (name == "umaze") {
        // One wall sticking out from the left edge; the corridor runs
        // right, up past the wall, then back left.
        s.walls = {{0.0, 0.45, 0.7, 0.55}};
        s.start_region = {0.05, 0.05, 0.30, 0.30};
        s.goal_region = {0.05, 0.70, 0.30, 0.95};
        s.routes = {{{0.85, 0.25}, {0.85, 0.75}}};
    } else if (name == "two-mode-maze") {
        // Central block with symmetric left/right corridors; the expert
        // commits to one corridor per episode (40% left / 60% right).
        s.walls = {{0.35, 0.30, 0.65, 0.70}};
        s.start_region = {0.40, 0.05, 0.60, 0.20};
        s.goal_region = {0.40, 0.80, 0.60, 0.95};
        s.routes = {{{0.20, 0.15}, {0.20, 0.50}, {0.20, 0.85}},
                    {{0.80, 0.15}, {0.80, 0.50}, {0.80, 0.85}}};
        s.left_route_prob = 0.4;
    } else {
        throw ConfigError("unknown env spec \"" + std::string(name) +
                          "\" (expected open | umaze | two-mode-maze)");
    }
    return s;
}

std::array<double, EnvSpec::kObsDim> observe(const EnvState& s) {
    return {s.position.x, s.position.y, s.goal.x, s.goal.y};
}

EnvState env_reset(const EnvSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    EnvState st;
    st.position = spec.start_region.sample(rng);
    st.goal = spec.goal_region.sample(rng);
    st.step_index = 0;
    return st;
}

Vec2 truncate_move(const EnvSpec& spec, const Vec2& p, const Vec2& q) {
    const double dx = q.x - p.x, dy = q.y - p.y;
    const double len = std::sqrt(dx * dx + dy * dy);
    if (len == 0.0) return p;

    double t_max = 1.0;
    // Unit-square border; landing exactly on it is allowed.
    if (q.x > 1.0) t_max = std::min(t_max, (1.0 - p.x) / dx);
    if (q.x < 0.0) t_max = std::min(t_max, (0.0 - p.x) / dx);
    if (q.y > 1.0) t_max = std::min(t_max, (1.0 - p.y) / dy);
    if (q.y < 0.0) t_max = std::min(t_max, (0.0 - p.y) / dy);

    for (const RectWall& w : spec.walls) {
        const double t_in = entry_param(w, p, q);
        if (t_in < t_max) {
            t_max = std::max(0.0, t_in - EnvSpec::kWallMargin / len);
        }
    }
    Vec2 out{p.x + t_max * dx, p.y + t_max * dy};
    out.x = std::clamp(out.x, 0.0, 1.0);
    out.y = std::clamp(out.y, 0.0, 1.0);
    return out;
}

bool line_of_sight(const EnvSpec& spec, const Vec2& p, const Vec2& q) {
    for (const RectWall& w : spec.walls) {
        if (std::isfinite(entry_param(w, p, q))) return false;
    }
    return true;
}

StepResult env_step(const EnvSpec& spec, const EnvState& state, const Action& action) {
    Action clipped;
    clipped.v[0] = std::clamp(action.v[0], -1.0, 1.0);
    clipped.v[1] = std::clamp(action.v[1], -1.0, 1.0);

    const Vec2 target{state.position.x + EnvSpec::kDt * clipped.v[0],
                      state.position.y + EnvSpec::kDt * clipped.v[1]};
    const Vec2 next_pos = truncate_move(spec, state.position, target);

    EnvState next = state;
    next.position = next_pos;
    next.step_index = state.step_index + 1;

    const double goal_dist = dist(next_pos, state.goal);
    const bool success = goal_dist < EnvSpec::kSuccessRadius;
    const bool done = success || next.step_index >= EnvSpec::kHorizon;

    Transition tr(observe(state), clipped, observe(next), done, success, -goal_dist);
    return {tr, next};
}

}  // namespace faopd
