#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "faopd/errors.hpp"
#include "faopd/rng.hpp"

namespace faopd {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

inline double dist(const Vec2& a, const Vec2& b) {
    const double dx = a.x - b.x, dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

// Axis-aligned wall; the blocked region is the open interior.
struct RectWall {
    double x0, y0, x1, y1;
    bool contains_strict(const Vec2& p) const {
        return p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1;
    }
};

struct Region {
    double x0, y0, x1, y1;
    Vec2 sample(Rng& rng) const { return {rng.uniform(x0, x1), rng.uniform(y0, y1)}; }
};

// Velocity command, one component per axis; the environment clips each
// component to [-1, 1] before integrating.
struct Action {
    std::array<double, 2> v{0.0, 0.0};
};

struct EnvState {
    Vec2 position;
    Vec2 goal;
    int step_index = 0;
};

// Point-navigation environment on the unit square with rectangular walls.
struct EnvSpec {
    std::string name;
    std::vector<RectWall> walls;
    Region start_region;
    Region goal_region;
    // Waypoint routes for the scripted expert, goal excluded. Single route
    // for open/umaze; two alternatives for the two-mode maze.
    std::vector<std::vector<Vec2>> routes;
    double left_route_prob = 1.0;  // probability the expert takes routes[0]

    static constexpr double kDt = 0.05;
    static constexpr double kSuccessRadius = 0.05;
    static constexpr double kWallMargin = 1e-6;
    static constexpr int kHorizon = 200;

    static constexpr std::size_t kObsDim = 4;     // [position, goal]
    static constexpr std::size_t kActionDim = 2;
    static constexpr std::size_t kJointDim = kObsDim + kActionDim;

    // Accepts "open", "umaze", "two-mode-maze"; anything else is a ConfigError.
    static EnvSpec make(std::string_view name);
};

// Counter behind the diagnostic-reward tripwire: FA-OPD training must never
// consume the environment reward, so reads are counted and the orchestrator
// asserts the count did not move across its update phase.
std::uint64_t diag_reward_reads();
void reset_diag_reward_reads();

class Transition {
public:
    std::array<double, EnvSpec::kObsDim> obs;
    Action action;  // as executed (clipped)
    std::array<double, EnvSpec::kObsDim> next_obs;
    bool done = false;
    bool success = false;

    Transition() = default;
    Transition(std::array<double, EnvSpec::kObsDim> o, Action a,
               std::array<double, EnvSpec::kObsDim> no, bool d, bool s, double env_reward)
        : obs(o), action(a), next_obs(no), done(d), success(s), env_reward_(env_reward) {}

    // Diagnostic only; every read is counted by the firewall tripwire.
    double diag_env_reward() const {
        bump_diag_counter();
        return env_reward_;
    }

private:
    static void bump_diag_counter();
    double env_reward_ = 0.0;
};

std::array<double, EnvSpec::kObsDim> observe(const EnvState& s);

// Start and goal drawn from the spec regions; deterministic under seed.
EnvState env_reset(const EnvSpec& spec, std::uint64_t seed);

struct StepResult {
    Transition transition;
    EnvState next;
};

// position' = clip(position + dt * clip(action, -1, 1), walls); movement is
// truncated at the first wall contact minus a small margin. Success when the
// new position is within kSuccessRadius of the goal.
StepResult env_step(const EnvSpec& spec, const EnvState& state, const Action& action);

// Travel from p toward q, stopping at the unit-square border and kWallMargin
// short of the first wall contact. Exposed for the geometry tests.
Vec2 truncate_move(const EnvSpec& spec, const Vec2& p, const Vec2& q);

// True when the open segment p-q does not pass through any wall interior.
bool line_of_sight(const EnvSpec& spec, const Vec2& p, const Vec2& q);

}  // namespace faopd
