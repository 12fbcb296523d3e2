#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "faopd/env.hpp"

namespace faopd {

// Expert (state, action) records grouped into trajectories. Rows are
// row-major: states is num_records x state_dim, actions num_records x
// action_dim. traj_offsets holds each trajectory's first record index plus
// an end sentinel.
struct DemoDataset {
    std::string env_name;
    std::size_t state_dim = 0;
    std::size_t action_dim = 0;
    std::uint64_t seed = 0;
    std::size_t traj_count = 0;

    std::vector<double> states;
    std::vector<double> actions;
    std::vector<std::size_t> traj_offsets;

    std::size_t num_records() const { return state_dim ? states.size() / state_dim : 0; }
    const double* state_row(std::size_t i) const { return states.data() + i * state_dim; }
    const double* action_row(std::size_t i) const { return actions.data() + i * action_dim; }

    bool operator==(const DemoDataset&) const = default;
};

// Rolls the scripted expert and keeps successful episodes only. Throws
// GenerationError when more than half the attempted episodes fail.
DemoDataset generate_demos(const EnvSpec& spec, std::size_t n_trajectories, std::uint64_t seed);

// Text format, one header line then comma-separated records at 17
// significant digits; each trajectory is terminated by a line "---".
void save_demos(const DemoDataset& ds, const std::string& path);
DemoDataset load_demos(const std::string& path);

}  // namespace faopd
