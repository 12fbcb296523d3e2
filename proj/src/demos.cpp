#include "faopd/demos.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "faopd/expert.hpp"

namespace faopd {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Splits a comma-separated line of decimals; throws IoError on junk.
std::vector<double> parse_row(const std::string& line, std::size_t line_no) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        std::size_t comma = line.find(',', pos);
        if (comma == std::string::npos) comma = line.size();
        const std::string field = line.substr(pos, comma - pos);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(field, &used));
            if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw IoError("demos: malformed number \"" + field + "\" on line " +
                          std::to_string(line_no));
        }
        pos = comma + 1;
        if (comma == line.size()) break;
    }
    return out;
}

}  // namespace

DemoDataset generate_demos(const EnvSpec& spec, std::size_t n_trajectories, std::uint64_t seed) {
    if (n_trajectories < 1) throw ContractError("generate_demos: n_trajectories must be >= 1");

    DemoDataset ds;
    ds.env_name = spec.name;
    ds.state_dim = EnvSpec::kObsDim;
    ds.action_dim = EnvSpec::kActionDim;
    ds.seed = seed;

    std::size_t attempts = 0, failures = 0;
    while (ds.traj_count < n_trajectories) {
        const std::uint64_t episode_seed = Rng::mix(seed, attempts);
        ++attempts;
        if (failures * 2 > attempts && attempts > 8) {
            throw GenerationError("generate_demos: expert failure rate above 50% on " +
                                  spec.name);
        }

        EnvState st = env_reset(spec, episode_seed);
        std::vector<double> ep_states, ep_actions;
        bool success = false;
        while (true) {
            const Action a = scripted_expert(spec, st, episode_seed);
            StepResult r = env_step(spec, st, a);
            const auto& tr = r.transition;
            ep_states.insert(ep_states.end(), tr.obs.begin(), tr.obs.end());
            ep_actions.insert(ep_actions.end(), tr.action.v.begin(), tr.action.v.end());
            st = r.next;
            if (tr.done) {
                success = tr.success;
                break;
            }
        }
        if (!success) {
            ++failures;
            continue;
        }
        ds.traj_offsets.push_back(ds.num_records());
        ds.states.insert(ds.states.end(), ep_states.begin(), ep_states.end());
        ds.actions.insert(ds.actions.end(), ep_actions.begin(), ep_actions.end());
        ++ds.traj_count;
    }
    ds.traj_offsets.push_back(ds.num_records());
    return ds;
}

void save_demos(const DemoDataset& ds, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("demos: cannot open \"" + path + "\" for writing");
    f << "#fa-opd-demos v1 env=" << ds.env_name << " state_dim=" << ds.state_dim
      << " action_dim=" << ds.action_dim << " seed=" << ds.seed << " trajs=" << ds.traj_count
      << "\n";
    for (std::size_t t = 0; t < ds.traj_count; ++t) {
        for (std::size_t i = ds.traj_offsets[t]; i < ds.traj_offsets[t + 1]; ++i) {
            const double* s = ds.state_row(i);
            const double* a = ds.action_row(i);
            for (std::size_t k = 0; k < ds.state_dim; ++k) {
                if (k) f << ',';
                f << fmt17(s[k]);
            }
            for (std::size_t k = 0; k < ds.action_dim; ++k) f << ',' << fmt17(a[k]);
            f << "\n";
        }
        f << "---\n";
    }
    if (!f) throw IoError("demos: write failed for \"" + path + "\"");
}

DemoDataset load_demos(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("demos: file not found: \"" + path + "\"");

    std::string header;
    if (!std::getline(f, header)) throw IoError("demos: empty file \"" + path + "\"");

    DemoDataset ds;
    {
        std::istringstream hs(header);
        std::string magic, version;
        hs >> magic >> version;
        if (magic != "#fa-opd-demos" || version != "v1") {
            throw IoError("demos: bad header \"" + header + "\"");
        }
        std::string kv;
        while (hs >> kv) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw IoError("demos: bad header field \"" + kv + "\"");
            const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
            try {
                if (key == "env") {
                    ds.env_name = val;
                } else if (key == "state_dim") {
                    ds.state_dim = std::stoul(val);
                } else if (key == "action_dim") {
                    ds.action_dim = std::stoul(val);
                } else if (key == "seed") {
                    ds.seed = std::stoull(val);
                } else if (key == "trajs") {
                    ds.traj_count = std::stoul(val);
                } else {
                    throw IoError("demos: unknown header key \"" + key + "\"");
                }
            } catch (const std::invalid_argument&) {
                throw IoError("demos: bad header value for \"" + key + "\"");
            }
        }
    }
    if (ds.state_dim == 0 || ds.action_dim == 0) {
        throw IoError("demos: header must set state_dim and action_dim");
    }

    const std::size_t row_len = ds.state_dim + ds.action_dim;
    std::string line;
    std::size_t line_no = 1;
    std::size_t traj_records = 0;
    std::size_t trajs_seen = 0;
    ds.traj_offsets.push_back(0);
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line == "---") {
            if (traj_records == 0) {
                throw IoError("demos: empty trajectory before line " + std::to_string(line_no));
            }
            ds.traj_offsets.push_back(ds.num_records());
            ++trajs_seen;
            traj_records = 0;
            continue;
        }
        const std::vector<double> row = parse_row(line, line_no);
        if (row.size() != row_len) {
            throw IoError("demos: dim mismatch on line " + std::to_string(line_no) + ": got " +
                          std::to_string(row.size()) + " fields, header implies " +
                          std::to_string(row_len));
        }
        ds.states.insert(ds.states.end(), row.begin(), row.begin() + ds.state_dim);
        ds.actions.insert(ds.actions.end(), row.begin() + ds.state_dim, row.end());
        ++traj_records;
    }
    if (traj_records > 0) {
        // Final trajectory without a closing marker still counts.
        ds.traj_offsets.push_back(ds.num_records());
        ++trajs_seen;
    }
    if (ds.num_records() == 0) throw IoError("demos: dataset has no records");
    if (trajs_seen != ds.traj_count) {
        throw IoError("demos: header says trajs=" + std::to_string(ds.traj_count) +
                      " but file contains " + std::to_string(trajs_seen));
    }
    return ds;
}

}  // namespace faopd
