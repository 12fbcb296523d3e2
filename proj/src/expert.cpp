#include "faopd/expert.hpp"

#include <cmath>
#include <limits>

namespace faopd {

namespace {
constexpr double kGain = 12.0;
constexpr double kNoise = 0.05;
}  // namespace

std::size_t expert_route_index(const EnvSpec& spec, std::uint64_t mode_seed) {
    if (spec.routes.size() < 2) return 0;
    Rng rng(Rng::mix(mode_seed, 0xA0));
    return rng.uniform() < spec.left_route_prob ? 0 : 1;
}

Action scripted_expert(const EnvSpec& spec, const EnvState& state, std::uint64_t mode_seed) {
    const std::size_t route = expert_route_index(spec, mode_seed);
    const auto& waypoints = spec.routes[route];

    // Furthest visible target along the route; the goal counts as the last
    // route point.
    Vec2 target = state.goal;
    if (!line_of_sight(spec, state.position, state.goal)) {
        bool found = false;
        for (std::size_t i = waypoints.size(); i-- > 0;) {
            if (line_of_sight(spec, state.position, waypoints[i])) {
                target = waypoints[i];
                found = true;
                break;
            }
        }
        if (!found) {
            // Should not happen with the shipped mazes; head for the
            // nearest waypoint as a fallback.
            double best = std::numeric_limits<double>::infinity();
            for (const Vec2& w : waypoints) {
                const double d = dist(state.position, w);
                if (d < best) {
                    best = d;
                    target = w;
                }
            }
        }
    }

    Rng noise_rng(Rng::mix(mode_seed, 0x5000 + static_cast<std::uint64_t>(state.step_index)));
    Action a;
    a.v[0] = kGain * (target.x - state.position.x) + noise_rng.uniform(-kNoise, kNoise);
    a.v[1] = kGain * (target.y - state.position.y) + noise_rng.uniform(-kNoise, kNoise);
    return a;
}

}  // namespace faopd
