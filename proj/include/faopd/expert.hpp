#pragma once

#include <cstdint>

#include "faopd/env.hpp"

namespace faopd {

// Waypoint-following controller standing in for the demonstrator. Greedy
// targeting: steer toward the furthest route point (goal included) that has
// line of sight, with proportional control plus +-0.05 uniform noise. For
// the two-mode maze, mode_seed picks the left corridor with probability
// left_route_prob, fixed for the whole episode.
Action scripted_expert(const EnvSpec& spec, const EnvState& state, std::uint64_t mode_seed);

// Route index the expert commits to for an episode (0 unless multi-route).
std::size_t expert_route_index(const EnvSpec& spec, std::uint64_t mode_seed);

}  // namespace faopd
