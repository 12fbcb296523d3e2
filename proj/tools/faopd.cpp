// faopd: demo generation, FA-OPD training, evaluation, oracle verification,
// beta sweeps and learning-curve plots for the toy navigation suite.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "faopd/checkpoint.hpp"
#include "faopd/config.hpp"
#include "faopd/demos.hpp"
#include "faopd/oracle.hpp"
#include "faopd/svg_plot.hpp"
#include "faopd/trainer.hpp"

namespace {

using namespace faopd;
namespace fs = std::filesystem;

constexpr int kExitOk = 0, kExitUsage = 2, kExitConfig = 3, kExitRuntime = 4;

struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

const char* kUsage =
    "usage: faopd <command> [flags]\n"
    "\n"
    "commands:\n"
    "  gen-demos  --env <open|umaze|two-mode-maze> --n <count> --out <file> [--seed <k>]\n"
    "  train      --config <file> --demos <file> --out <dir>\n"
    "  eval       --policy <ckpt> --env <name> [--episodes <n>] [--seed <k>] [--stochastic]\n"
    "  verify     --out <report> [--config <file>] [--seed <k>] [--steps <n>]\n"
    "  sweep-beta --config <file> --demos <file> --out <dir> [--betas <v,v,...>]\n"
    "  plot       --in <metrics.csv> [--in <metrics.csv> ...] --out <svg>\n"
    "\n"
    "exit codes: 0 ok, 2 usage, 3 config, 4 runtime\n";

struct Args {
    std::map<std::string, std::string> flags;
    std::vector<std::string> inputs;  // repeated --in
    bool stochastic = false;
};

Args parse_flags(int argc, char** argv, int start) {
    Args a;
    for (int i = start; i < argc; ++i) {
        const std::string flag = argv[i];
        if (flag == "--stochastic") {
            a.stochastic = true;
            continue;
        }
        if (flag.rfind("--", 0) != 0) throw UsageError("unexpected argument \"" + flag + "\"");
        if (i + 1 >= argc) throw UsageError("flag \"" + flag + "\" is missing a value");
        const std::string value = argv[++i];
        if (flag == "--in") {
            a.inputs.push_back(value);
        } else {
            a.flags[flag.substr(2)] = value;
        }
    }
    return a;
}

const std::string& required(const Args& a, const std::string& name) {
    auto it = a.flags.find(name);
    if (it == a.flags.end()) throw UsageError("missing required flag \"--" + name + "\"");
    return it->second;
}

std::string optional(const Args& a, const std::string& name, const std::string& def) {
    auto it = a.flags.find(name);
    return it == a.flags.end() ? def : it->second;
}

long parse_long(const std::string& flag, const std::string& v) {
    try {
        std::size_t used = 0;
        const long n = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw UsageError("flag \"--" + flag + "\": cannot parse integer \"" + v + "\"");
    }
}

int cmd_gen_demos(const Args& a) {
    const EnvSpec spec = EnvSpec::make(required(a, "env"));
    const long n = parse_long("n", required(a, "n"));
    if (n < 1) throw UsageError("flag \"--n\" must be >= 1");
    const std::string out = required(a, "out");
    const std::uint64_t seed =
        static_cast<std::uint64_t>(parse_long("seed", optional(a, "seed", "0")));
    const DemoDataset ds = generate_demos(spec, static_cast<std::size_t>(n), seed);
    save_demos(ds, out);
    std::cout << "wrote " << out << " (" << ds.traj_count << " trajectories, "
              << ds.num_records() << " records)\n";
    return kExitOk;
}

int cmd_train(const Args& a) {
    RunConfig cfg = parse_config(required(a, "config"));
    const std::string demos_path = required(a, "demos");
    const std::string out_dir = required(a, "out");
    cfg.out_dir = out_dir;
    fs::create_directories(out_dir);

    const DemoDataset demos = load_demos(demos_path);
    Trainer trainer(cfg, demos);
    MetricsWriter metrics(out_dir + "/metrics.csv");
    for (int i = 0; i < cfg.iterations; ++i) {
        const IterationMetrics m = trainer.train_iteration();
        metrics.append(m);
        std::fprintf(stderr,
                     "iter %d steps %ld success %.2f mean_reward %.3f kl %.4f (%.1fs)\n",
                     m.iter, m.steps, m.success_rate, m.mean_reward, m.kl, m.seconds);
    }
    save_teacher_checkpoint(trainer.teacher(), trainer.normalizer(), out_dir + "/teacher.ckpt");
    save_policy_checkpoint(trainer.policy(), trainer.value_net(), trainer.normalizer(),
                           out_dir + "/policy.ckpt");
    std::cout << "wrote " << out_dir << "/metrics.csv\n";
    std::cout << "wrote " << out_dir << "/teacher.ckpt\n";
    std::cout << "wrote " << out_dir << "/policy.ckpt\n";
    return kExitOk;
}

int cmd_eval(const Args& a) {
    const PolicyCheckpoint ckpt = load_policy_checkpoint(required(a, "policy"));
    const EnvSpec spec = EnvSpec::make(required(a, "env"));
    const long episodes = parse_long("episodes", optional(a, "episodes", "100"));
    const std::uint64_t seed =
        static_cast<std::uint64_t>(parse_long("seed", optional(a, "seed", "0")));
    const EvalResult r = evaluate_policy(ckpt.policy, ckpt.norm, spec,
                                         static_cast<int>(episodes), seed, !a.stochastic);
    std::printf("success_rate=%.4f mean_return=%.4f episodes=%ld env=%s mode=%s\n",
                r.success_rate, r.mean_return, episodes, spec.name.c_str(),
                a.stochastic ? "stochastic" : "deterministic");
    return kExitOk;
}

int cmd_verify(const Args& a) {
    const std::string out = required(a, "out");
    const RunConfig cfg = parse_config(optional(a, "config", ""));
    const std::uint64_t seed =
        static_cast<std::uint64_t>(parse_long("seed", optional(a, "seed", "0")));
    const long steps = parse_long("steps", optional(a, "steps", "6000"));
    const VerifyReport rep =
        verify_reward_ratio(cfg, seed, GaussianSpec({0.0, 0.0}, {0.25, 0.25}),
                            GaussianSpec({1.0, 1.0}, {0.25, 0.25}), static_cast<int>(steps));
    write_report(rep, out);
    std::cout << format_report(rep);
    std::cout << "wrote " << out << "\n";
    return rep.all_pass() ? kExitOk : kExitRuntime;
}

int cmd_sweep_beta(const Args& a) {
    const RunConfig base = parse_config(required(a, "config"));
    const std::string demos_path = required(a, "demos");
    const std::string out_dir = required(a, "out");
    std::vector<double> betas{0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0};
    if (a.flags.count("betas")) {
        betas.clear();
        const std::string& list = a.flags.at("betas");
        std::size_t pos = 0;
        while (pos <= list.size()) {
            std::size_t comma = list.find(',', pos);
            if (comma == std::string::npos) comma = list.size();
            const std::string field = list.substr(pos, comma - pos);
            try {
                betas.push_back(std::stod(field));
            } catch (const std::exception&) {
                throw UsageError("flag \"--betas\": cannot parse \"" + field + "\"");
            }
            pos = comma + 1;
            if (comma == list.size()) break;
        }
    }
    const DemoDataset demos = load_demos(demos_path);
    fs::create_directories(out_dir);
    for (double beta : betas) {
        RunConfig cfg = base;
        cfg.beta = beta;
        char name[64];
        std::snprintf(name, sizeof(name), "beta_%g", beta);
        const std::string run_dir = out_dir + "/" + name;
        fs::create_directories(run_dir);
        cfg.out_dir = run_dir;
        Trainer trainer(cfg, demos);
        MetricsWriter metrics(run_dir + "/metrics.csv");
        for (int i = 0; i < cfg.iterations; ++i) {
            const IterationMetrics m = trainer.train_iteration();
            metrics.append(m);
        }
        save_policy_checkpoint(trainer.policy(), trainer.value_net(), trainer.normalizer(),
                               run_dir + "/policy.ckpt");
        std::cout << "wrote " << run_dir << "/metrics.csv\n";
    }
    return kExitOk;
}

int cmd_plot(const Args& a) {
    if (a.inputs.empty()) throw UsageError("missing required flag \"--in\"");
    const std::string out = required(a, "out");
    std::vector<CurveSeries> success, reward;
    for (const std::string& path : a.inputs) {
        const auto rows = MetricsWriter::load(path);
        CurveSeries s, r;
        s.label = r.label = fs::path(path).parent_path().filename().string();
        if (s.label.empty()) s.label = r.label = fs::path(path).filename().string();
        for (const auto& m : rows) {
            s.x.push_back(static_cast<double>(m.steps));
            s.y.push_back(m.success_rate);
            r.x.push_back(static_cast<double>(m.steps));
            r.y.push_back(m.mean_reward);
        }
        success.push_back(std::move(s));
        reward.push_back(std::move(r));
    }
    write_svg(render_learning_curves(success, reward), out);
    std::cout << "wrote " << out << "\n";
    return kExitOk;
}

int dispatch(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << kUsage;
        return kExitUsage;
    }
    const std::string cmd = argv[1];
    const Args args = parse_flags(argc, argv, 2);
    if (cmd == "gen-demos") return cmd_gen_demos(args);
    if (cmd == "train") return cmd_train(args);
    if (cmd == "eval") return cmd_eval(args);
    if (cmd == "verify") return cmd_verify(args);
    if (cmd == "sweep-beta") return cmd_sweep_beta(args);
    if (cmd == "plot") return cmd_plot(args);
    std::cerr << "unknown command \"" << cmd << "\"\n" << kUsage;
    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n" << kUsage;
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
