#include "faopd/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace faopd {

namespace {

std::string join17(const std::vector<double>& v) {
    std::string out;
    char buf[40];
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
        out += buf;
    }
    return out;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

std::vector<double> split_doubles(const std::string& s, const std::string& key) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        const std::string field = s.substr(pos, comma - pos);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(field, &used));
            if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw IoError("checkpoint: malformed number in \"" + key + "\"");
        }
        pos = comma + 1;
        if (comma == s.size()) break;
    }
    return out;
}

std::vector<std::size_t> split_sizes(const std::string& s, const std::string& key) {
    std::vector<std::size_t> out;
    for (double v : split_doubles(s, key)) out.push_back(static_cast<std::size_t>(v));
    return out;
}

// Simple key=value file body below a magic first line.
std::map<std::string, std::string> read_kv_file(const std::string& path,
                                                const std::string& magic) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: file not found: \"" + path + "\"");
    std::string line;
    if (!std::getline(f, line) || line != magic) {
        throw IoError("checkpoint: bad header in \"" + path + "\" (expected " + magic + ")");
    }
    std::map<std::string, std::string> kv;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw IoError("checkpoint: malformed line \"" + line + "\"");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

const std::string& field(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw IoError("checkpoint: missing field \"" + key + "\"");
    return it->second;
}

Mlp mlp_from(const std::vector<std::size_t>& widths, const std::vector<double>& params,
             const std::string& what) {
    Rng dummy(0);
    Mlp net(widths, dummy);
    if (params.size() != net.param_count()) {
        throw IoError("checkpoint: " + what + " has " + std::to_string(params.size()) +
                      " parameters, widths imply " + std::to_string(net.param_count()));
    }
    net.set_flat_params(params);
    return net;
}

void write_norm(std::ostream& o, const RunningNormalizer& n) {
    o << "norm_count=" << n.count() << "\n";
    o << "norm_mean=" << join17(n.mean()) << "\n";
    o << "norm_m2=" << join17(n.m2()) << "\n";
}

RunningNormalizer read_norm(const std::map<std::string, std::string>& kv) {
    const std::uint64_t count = std::stoull(field(kv, "norm_count"));
    return RunningNormalizer::restore(count, split_doubles(field(kv, "norm_mean"), "norm_mean"),
                                      split_doubles(field(kv, "norm_m2"), "norm_m2"));
}

}  // namespace

void save_teacher_checkpoint(const FmTeacher& teacher, const RunningNormalizer& norm,
                             const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: cannot open \"" + path + "\" for writing");
    f << "#fa-opd-teacher v1\n";
    f << "state_dim=" << teacher.state_dim << "\n";
    f << "action_dim=" << teacher.action_dim << "\n";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", teacher.noise_scale);
    f << "noise_scale=" << buf << "\n";
    f << "widths=" << join_sizes(teacher.vnet.widths) << "\n";
    f << "params=" << join17(teacher.vnet.flat_params()) << "\n";
    write_norm(f, norm);
    if (!f) throw IoError("checkpoint: write failed for \"" + path + "\"");
}

TeacherCheckpoint load_teacher_checkpoint(const std::string& path) {
    const auto kv = read_kv_file(path, "#fa-opd-teacher v1");
    TeacherCheckpoint out;
    out.teacher.state_dim = static_cast<std::size_t>(std::stoul(field(kv, "state_dim")));
    out.teacher.action_dim = static_cast<std::size_t>(std::stoul(field(kv, "action_dim")));
    out.teacher.noise_scale = std::stod(field(kv, "noise_scale"));
    const auto widths = split_sizes(field(kv, "widths"), "widths");
    if (widths.size() < 2 || widths.front() != out.teacher.joint_dim() + 4 ||
        widths.back() != out.teacher.joint_dim()) {
        throw IoError("checkpoint: teacher widths do not match the declared joint dims");
    }
    out.teacher.vnet = mlp_from(widths, split_doubles(field(kv, "params"), "params"), "teacher");
    out.norm = read_norm(kv);
    return out;
}

void save_policy_checkpoint(const GaussianPolicy& policy, const Mlp& value_net,
                            const RunningNormalizer& norm, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: cannot open \"" + path + "\" for writing");
    f << "#fa-opd-policy v1\n";
    f << "mean_widths=" << join_sizes(policy.mean_net.widths) << "\n";
    f << "mean_params=" << join17(policy.mean_net.flat_params()) << "\n";
    f << "log_std=" << join17(policy.log_std.data) << "\n";
    f << "value_widths=" << join_sizes(value_net.widths) << "\n";
    f << "value_params=" << join17(value_net.flat_params()) << "\n";
    write_norm(f, norm);
    if (!f) throw IoError("checkpoint: write failed for \"" + path + "\"");
}

PolicyCheckpoint load_policy_checkpoint(const std::string& path) {
    const auto kv = read_kv_file(path, "#fa-opd-policy v1");
    PolicyCheckpoint out;
    const auto mean_widths = split_sizes(field(kv, "mean_widths"), "mean_widths");
    out.policy.mean_net = mlp_from(mean_widths, split_doubles(field(kv, "mean_params"),
                                                              "mean_params"),
                                   "policy mean net");
    const auto log_std = split_doubles(field(kv, "log_std"), "log_std");
    if (log_std.size() != mean_widths.back()) {
        throw IoError("checkpoint: log_std length does not match the action dimension");
    }
    out.policy.log_std = Tensor({1, log_std.size()}, log_std);
    const auto value_widths = split_sizes(field(kv, "value_widths"), "value_widths");
    if (value_widths.back() != 1 || value_widths.front() != mean_widths.front()) {
        throw IoError("checkpoint: value net widths are inconsistent");
    }
    out.value_net = mlp_from(value_widths, split_doubles(field(kv, "value_params"),
                                                         "value_params"),
                             "value net");
    out.norm = read_norm(kv);
    return out;
}

void check_teacher_matches_config(const FmTeacher& teacher, const RunConfig& cfg) {
    const std::size_t depth = teacher.vnet.widths.size() >= 2 ? teacher.vnet.widths.size() - 2 : 0;
    if (depth != static_cast<std::size_t>(cfg.discrim_depth)) {
        throw ConfigError("checkpoint: teacher depth " + std::to_string(depth) +
                          " != config discrim_depth " + std::to_string(cfg.discrim_depth));
    }
    for (std::size_t i = 1; i + 1 < teacher.vnet.widths.size(); ++i) {
        if (teacher.vnet.widths[i] != static_cast<std::size_t>(cfg.discrim_num_unit)) {
            throw ConfigError("checkpoint: teacher width != config discrim_num_unit");
        }
    }
}

}  // namespace faopd
