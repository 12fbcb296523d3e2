#include "faopd/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "faopd/env.hpp"

namespace faopd {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& val) {
    try {
        std::size_t used = 0;
        const double v = std::stod(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: cannot parse value \"" + val + "\" for key \"" + key + "\"");
    }
}

long parse_int(const std::string& key, const std::string& val) {
    try {
        std::size_t used = 0;
        const long v = std::stol(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: cannot parse integer \"" + val + "\" for key \"" + key + "\"");
    }
}

bool parse_bool(const std::string& key, const std::string& val) {
    if (val == "true" || val == "True" || val == "1") return true;
    if (val == "false" || val == "False" || val == "0") return false;
    throw ConfigError("config: cannot parse boolean \"" + val + "\" for key \"" + key + "\"");
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void apply_key(RunConfig& c, const std::string& key, const std::string& val) {
    if (key == "fm_num_steps") c.fm_num_steps = static_cast<int>(parse_int(key, val));
    else if (key == "discrim_depth") c.discrim_depth = static_cast<int>(parse_int(key, val));
    else if (key == "discrim_num_unit") c.discrim_num_unit = static_cast<int>(parse_int(key, val));
    else if (key == "disc_lr") c.disc_lr = parse_double(key, val);
    else if (key == "expert_loss_rate") c.expert_loss_rate = parse_double(key, val);
    else if (key == "agent_loss_rate") c.agent_loss_rate = parse_double(key, val);
    else if (key == "student_lr") c.student_lr = parse_double(key, val);
    else if (key == "reward_update_freq") c.reward_update_freq = static_cast<int>(parse_int(key, val));
    else if (key == "state_norm") c.state_norm = parse_bool(key, val);
    else if (key == "action_norm") c.action_norm = parse_bool(key, val);
    else if (key == "reward_norm") c.reward_norm = parse_bool(key, val);
    else if (key == "num_samples") c.num_samples = static_cast<int>(parse_int(key, val));
    else if (key == "temperature") c.temperature = parse_double(key, val);
    else if (key == "noise_scale") c.noise_scale = parse_double(key, val);
    else if (key == "gamma") c.gamma = parse_double(key, val);
    else if (key == "gae_lambda") c.gae_lambda = parse_double(key, val);
    else if (key == "clip_eps") c.clip_eps = parse_double(key, val);
    else if (key == "epochs") c.epochs = static_cast<int>(parse_int(key, val));
    else if (key == "minibatch") c.minibatch = static_cast<int>(parse_int(key, val));
    else if (key == "steps_per_iter") c.steps_per_iter = static_cast<int>(parse_int(key, val));
    else if (key == "beta") c.beta = parse_double(key, val);
    else if (key == "entropy_coef") c.entropy_coef = parse_double(key, val);
    else if (key == "grad_clip") c.grad_clip = parse_double(key, val);
    else if (key == "env") c.env = val;
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, val));
    else if (key == "out_dir") c.out_dir = val;
    else if (key == "iterations") c.iterations = static_cast<int>(parse_int(key, val));
    else if (key == "disc_batch") c.disc_batch = static_cast<int>(parse_int(key, val));
    else if (key == "disc_updates") c.disc_updates = static_cast<int>(parse_int(key, val));
    else if (key == "use_env_reward") c.use_env_reward = parse_bool(key, val);
    else if (key == "distill_mean_mode") c.distill_mean_mode = parse_bool(key, val);
    else if (key == "teacher_warmstart_steps")
        c.teacher_warmstart_steps = static_cast<int>(parse_int(key, val));
    else
        throw ConfigError("config: unknown key \"" + key + "\"");
}

void require(bool cond, const std::string& key, const std::string& why) {
    if (!cond) throw ConfigError("config: invalid value for \"" + key + "\": " + why);
}

}  // namespace

void validate_config(const RunConfig& c) {
    require(c.fm_num_steps >= 1, "fm_num_steps", "must be >= 1");
    require(c.discrim_depth >= 1, "discrim_depth", "must be >= 1");
    require(c.discrim_num_unit >= 1, "discrim_num_unit", "must be >= 1");
    require(c.disc_lr > 0, "disc_lr", "must be > 0");
    require(std::isfinite(c.expert_loss_rate), "expert_loss_rate", "must be finite");
    require(std::isfinite(c.agent_loss_rate), "agent_loss_rate", "must be finite");
    require(c.student_lr > 0, "student_lr", "must be > 0");
    require(c.reward_update_freq >= 1, "reward_update_freq", "must be >= 1");
    require(c.num_samples >= 1, "num_samples", "must be >= 1");
    require(c.temperature > 0, "temperature", "must be > 0");
    require(c.noise_scale > 0, "noise_scale", "must be > 0");
    require(c.gamma >= 0 && c.gamma <= 1, "gamma", "must be in [0,1]");
    require(c.gae_lambda >= 0 && c.gae_lambda <= 1, "gae_lambda", "must be in [0,1]");
    require(c.clip_eps > 0, "clip_eps", "must be > 0");
    require(c.epochs >= 1, "epochs", "must be >= 1");
    require(c.minibatch >= 1, "minibatch", "must be >= 1");
    require(c.steps_per_iter >= 1, "steps_per_iter", "must be >= 1");
    require(c.beta >= 0, "beta", "must be >= 0");
    require(c.entropy_coef >= 0, "entropy_coef", "must be >= 0");
    require(c.grad_clip > 0, "grad_clip", "must be > 0");
    require(c.iterations >= 1, "iterations", "must be >= 1");
    require(c.disc_batch >= 1, "disc_batch", "must be >= 1");
    require(c.disc_updates >= 0, "disc_updates", "must be >= 0");
    require(c.teacher_warmstart_steps >= 0, "teacher_warmstart_steps", "must be >= 0");
    try {
        (void)EnvSpec::make(c.env);
    } catch (const ConfigError&) {
        throw ConfigError("config: invalid value for \"env\": unknown environment \"" + c.env +
                          "\"");
    }
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: line " + std::to_string(line_no) +
                              " is not of the form key = value");
        }
        apply_key(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    validate_config(c);
    return c;
}

RunConfig parse_config(const std::string& path) {
    if (path.empty()) {
        RunConfig c;
        validate_config(c);
        return c;
    }
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open \"" + path + "\"");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream o;
    o << "fm_num_steps = " << c.fm_num_steps << "\n";
    o << "discrim_depth = " << c.discrim_depth << "\n";
    o << "discrim_num_unit = " << c.discrim_num_unit << "\n";
    o << "disc_lr = " << fmt(c.disc_lr) << "\n";
    o << "expert_loss_rate = " << fmt(c.expert_loss_rate) << "\n";
    o << "agent_loss_rate = " << fmt(c.agent_loss_rate) << "\n";
    o << "student_lr = " << fmt(c.student_lr) << "\n";
    o << "reward_update_freq = " << c.reward_update_freq << "\n";
    o << "state_norm = " << (c.state_norm ? "true" : "false") << "\n";
    o << "action_norm = " << (c.action_norm ? "true" : "false") << "\n";
    o << "reward_norm = " << (c.reward_norm ? "true" : "false") << "\n";
    o << "num_samples = " << c.num_samples << "\n";
    o << "temperature = " << fmt(c.temperature) << "\n";
    o << "noise_scale = " << fmt(c.noise_scale) << "\n";
    o << "gamma = " << fmt(c.gamma) << "\n";
    o << "gae_lambda = " << fmt(c.gae_lambda) << "\n";
    o << "clip_eps = " << fmt(c.clip_eps) << "\n";
    o << "epochs = " << c.epochs << "\n";
    o << "minibatch = " << c.minibatch << "\n";
    o << "steps_per_iter = " << c.steps_per_iter << "\n";
    o << "beta = " << fmt(c.beta) << "\n";
    o << "entropy_coef = " << fmt(c.entropy_coef) << "\n";
    o << "grad_clip = " << fmt(c.grad_clip) << "\n";
    o << "env = " << c.env << "\n";
    o << "seed = " << c.seed << "\n";
    o << "out_dir = " << c.out_dir << "\n";
    o << "iterations = " << c.iterations << "\n";
    o << "disc_batch = " << c.disc_batch << "\n";
    o << "disc_updates = " << c.disc_updates << "\n";
    o << "use_env_reward = " << (c.use_env_reward ? "true" : "false") << "\n";
    o << "distill_mean_mode = " << (c.distill_mean_mode ? "true" : "false") << "\n";
    o << "teacher_warmstart_steps = " << c.teacher_warmstart_steps << "\n";
    return o.str();
}

}  // namespace faopd
