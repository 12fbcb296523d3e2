#include "faopd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "faopd/adam.hpp"
#include "faopd/reward.hpp"
#include "faopd/teacher.hpp"

namespace faopd {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

std::vector<double> ranks_of(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

Tensor sample_batch(const GaussianSpec& g, std::size_t rows, Rng& rng) {
    Tensor out({rows, g.dim()});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < g.dim(); ++k) {
            out.data[r * g.dim() + k] = g.mean[k] + g.stddev[k] * rng.normal();
        }
    }
    return out;
}

}  // namespace

GaussianSpec::GaussianSpec(std::vector<double> m, std::vector<double> s)
    : mean(std::move(m)), stddev(std::move(s)) {
    if (mean.size() != stddev.size()) throw DimensionError("GaussianSpec: mean/stddev dims differ");
    for (double sd : stddev) {
        if (!(sd > 0.0)) throw ContractError("GaussianSpec: stddev entries must be > 0");
    }
}

double gaussian_log_density(const GaussianSpec& g, std::span<const double> x) {
    if (x.size() != g.dim()) throw DimensionError("gaussian_log_density: dim mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double z = (x[i] - g.mean[i]) / g.stddev[i];
        acc += -0.5 * z * z - std::log(g.stddev[i]) - 0.5 * kLog2Pi;
    }
    return acc;
}

double gaussian_log_ratio(std::span<const double> x, const GaussianSpec& p,
                          const GaussianSpec& q) {
    return gaussian_log_density(p, x) - gaussian_log_density(q, x);
}

double rank_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("rank_correlation: length mismatch");
    if (a.size() < 3) throw ContractError("rank_correlation: need at least 3 points");
    const std::vector<double> ra = ranks_of(a);
    const std::vector<double> rb = ranks_of(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) {
        throw ContractError("rank_correlation: undefined for constant input");
    }
    return sab / std::sqrt(saa * sbb);
}

bool VerifyReport::all_pass() const {
    if (!training_ok) return false;
    for (const VerifyCheck& c : checks) {
        if (!c.pass) return false;
    }
    return !checks.empty();
}

VerifyReport verify_reward_ratio(const RunConfig& cfg, std::uint64_t seed,
                                 const GaussianSpec& expert, const GaussianSpec& agent,
                                 int train_steps) {
    if (expert.dim() != 2 || agent.dim() != 2) {
        throw ContractError("verify_reward_ratio: specs must be 2-dimensional");
    }
    VerifyReport rep;
    rep.degenerate = expert == agent;

    Rng rng(seed);
    // Joint dimension 2, split 1+1; only the scorer role is exercised here.
    FmTeacher teacher(1, 1, static_cast<std::size_t>(cfg.discrim_depth),
                      static_cast<std::size_t>(cfg.discrim_num_unit), cfg.noise_scale, rng);
    Adam opt(teacher.vnet.params(), cfg.disc_lr);

    const std::size_t batch = 256;
    try {
        for (int step = 0; step < train_steps; ++step) {
            const Tensor xe = sample_batch(expert, batch, rng);
            const Tensor xa = sample_batch(agent, batch, rng);
            Tape tape;
            MlpVars vars = teacher.vnet.bind(tape);
            Var loss = tape.add(
                cfm_loss_var(tape, teacher, vars, xe, 1, rng.next_u64()),
                cfm_loss_var(tape, teacher, vars, xa, 0, rng.next_u64()));
            tape.backward(loss);
            opt.step();
        }
    } catch (const NumericError&) {
        rep.training_ok = false;
        rep.checks.push_back({"training_finite", 0.0, 1.0, false});
        return rep;
    }

    // 10x10 probe grid spanning both modes by +-3 sigma.
    double lo = 1e300, hi = -1e300;
    for (std::size_t k = 0; k < 2; ++k) {
        lo = std::min({lo, expert.mean[k] - 3.0 * expert.stddev[k],
                       agent.mean[k] - 3.0 * agent.stddev[k]});
        hi = std::max({hi, expert.mean[k] + 3.0 * expert.stddev[k],
                       agent.mean[k] + 3.0 * agent.stddev[k]});
    }
    const int grid_n = 10;
    Tensor probes({static_cast<std::size_t>(grid_n * grid_n), 2});
    for (int i = 0; i < grid_n; ++i) {
        for (int j = 0; j < grid_n; ++j) {
            const std::size_t r = static_cast<std::size_t>(i * grid_n + j);
            probes.data[r * 2 + 0] = lo + (hi - lo) * i / (grid_n - 1.0);
            probes.data[r * 2 + 1] = lo + (hi - lo) * j / (grid_n - 1.0);
        }
    }

    std::vector<double> dist1, dist0;
    estimate_dist_pair(teacher, probes, cfg.num_samples, Rng::mix(seed, 0xD157), dist1, dist0);

    std::vector<double> reward(probes.rows()), scaled_reward(probes.rows());
    std::vector<double> analytic(probes.rows()), neg_logp(probes.rows());
    double identity_gap = 0.0, mean_r = 0.0;
    for (std::size_t r = 0; r < probes.rows(); ++r) {
        const double rr = airl_reward(dist1[r], dist0[r], cfg.temperature);
        reward[r] = rr;
        scaled_reward[r] = 0.5 * cfg.temperature * rr;
        mean_r += rr;
        // Independent route through the softmax probability.
        const double d = discriminator_prob(dist1[r], dist0[r], cfg.temperature);
        if (std::abs(rr) < 15.0) {
            identity_gap = std::max(identity_gap,
                                    std::abs((std::log(d) - std::log1p(-d)) -
                                             (dist0[r] - dist1[r]) / cfg.temperature));
        }
        const double* x = probes.data.data() + r * 2;
        analytic[r] = gaussian_log_ratio(std::span<const double>(x, 2), expert, agent);
        neg_logp[r] = -gaussian_log_density(expert, std::span<const double>(x, 2));
    }
    mean_r /= static_cast<double>(probes.rows());

    rep.checks.push_back({"algebraic_identity_max_gap", identity_gap, 1e-9, identity_gap < 1e-9});
    if (rep.degenerate) {
        const double v = std::abs(mean_r);
        rep.checks.push_back({"degenerate_abs_mean_reward", v, 2.0, v < 2.0});
        return rep;
    }
    const double rho2 = rank_correlation(scaled_reward, analytic);
    rep.checks.push_back({"prop2_reward_vs_log_ratio_spearman", rho2, 0.9, rho2 >= 0.9});
    const double rho1 = rank_correlation(dist1, neg_logp);
    rep.checks.push_back({"prop1_dist_vs_neg_logp_spearman", rho1, 0.9, rho1 >= 0.9});
    return rep;
}

VerifyReport verify_reward_ratio(const RunConfig& cfg, std::uint64_t seed) {
    return verify_reward_ratio(cfg, seed, GaussianSpec({0.0, 0.0}, {0.25, 0.25}),
                               GaussianSpec({1.0, 1.0}, {0.25, 0.25}));
}

std::string format_report(const VerifyReport& rep) {
    std::string out;
    for (const VerifyCheck& c : rep.checks) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "check=%s value=%.6g threshold=%.6g pass=%s\n",
                      c.name.c_str(), c.value, c.threshold, c.pass ? "true" : "false");
        out += buf;
    }
    if (rep.degenerate) out += "check=degenerate_flag value=1 threshold=1 pass=true\n";
    return out;
}

void write_report(const VerifyReport& rep, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("report: cannot open \"" + path + "\" for writing");
    f << format_report(rep);
}

}  // namespace faopd
