#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "faopd/demos.hpp"

using namespace faopd;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string tmp_path(const char* name) { return std::string("./") + name; }

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    f << content;
}

}  // namespace

TEST_CASE("generate_demos is byte-deterministic under a fixed seed") {
    const EnvSpec spec = EnvSpec::make("umaze");
    const std::string p1 = tmp_path("demo_det_a.txt"), p2 = tmp_path("demo_det_b.txt");
    save_demos(generate_demos(spec, 1, 7), p1);
    save_demos(generate_demos(spec, 1, 7), p2);
    CHECK(slurp(p1) == slurp(p2));
    CHECK(!slurp(p1).empty());
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("every stored trajectory ends in success") {
    const EnvSpec spec = EnvSpec::make("umaze");
    const DemoDataset ds = generate_demos(spec, 25, 3);
    REQUIRE(ds.traj_count == 25);
    for (std::size_t t = 0; t < ds.traj_count; ++t) {
        // Replay the final record through the dynamics; the episode was
        // kept, so that last step must reach the goal.
        const std::size_t last = ds.traj_offsets[t + 1] - 1;
        const double* s = ds.state_row(last);
        const double* a = ds.action_row(last);
        EnvState st;
        st.position = {s[0], s[1]};
        st.goal = {s[2], s[3]};
        st.step_index = static_cast<int>(last - ds.traj_offsets[t]);
        StepResult r = env_step(spec, st, Action{{a[0], a[1]}});
        CHECK(r.transition.success);
    }
}

TEST_CASE("two-mode demos contain both route modes") {
    const EnvSpec spec = EnvSpec::make("two-mode-maze");
    const DemoDataset ds = generate_demos(spec, 200, 11);
    int left = 0, right = 0;
    for (std::size_t t = 0; t < ds.traj_count; ++t) {
        const std::size_t mid = (ds.traj_offsets[t] + ds.traj_offsets[t + 1]) / 2;
        (ds.state_row(mid)[0] < 0.5 ? left : right)++;
    }
    // 40/60 route split: both clusters must be populated.
    CHECK(left > 40);
    CHECK(right > 60);
}

TEST_CASE("generation fails loudly when the expert cannot solve the env") {
    // Goal region fenced in on all sides: every episode times out.
    EnvSpec trap = EnvSpec::make("open");
    trap.name = "trap";
    trap.goal_region = {0.45, 0.45, 0.55, 0.55};
    trap.start_region = {0.05, 0.05, 0.15, 0.15};
    trap.walls = {{0.35, 0.35, 0.65, 0.40},
                  {0.35, 0.60, 0.65, 0.65},
                  {0.35, 0.35, 0.40, 0.65},
                  {0.60, 0.35, 0.65, 0.65}};
    CHECK_THROWS_AS(generate_demos(trap, 5, 0), GenerationError);
}

TEST_CASE("write-then-load round trip preserves the dataset") {
    const EnvSpec spec = EnvSpec::make("two-mode-maze");
    const DemoDataset ds = generate_demos(spec, 5, 21);
    const std::string p = tmp_path("demo_rt.txt");
    save_demos(ds, p);
    const DemoDataset back = load_demos(p);
    CHECK(ds == back);
    std::remove(p.c_str());
}

TEST_CASE("loader rejects a row with the wrong field count") {
    const std::string p = tmp_path("demo_bad_dim.txt");
    write_file(p,
               "#fa-opd-demos v1 env=umaze state_dim=4 action_dim=2 seed=0 trajs=1\n"
               "0.1,0.2,0.3,0.4,0.5,0.6,0.7\n"
               "---\n");
    CHECK_THROWS_WITH_AS(load_demos(p), doctest::Contains("dim mismatch"), IoError);
    std::remove(p.c_str());
}

TEST_CASE("loader rejects an empty record section") {
    const std::string p = tmp_path("demo_empty.txt");
    write_file(p, "#fa-opd-demos v1 env=umaze state_dim=4 action_dim=2 seed=0 trajs=0\n");
    CHECK_THROWS_WITH_AS(load_demos(p), doctest::Contains("no records"), IoError);
    std::remove(p.c_str());
}

TEST_CASE("loader reports a missing file distinctly") {
    CHECK_THROWS_WITH_AS(load_demos("./does_not_exist_demos.txt"),
                         doctest::Contains("not found"), IoError);
}

TEST_CASE("loader rejects malformed numbers and trajectory miscounts") {
    const std::string p = tmp_path("demo_junk.txt");
    write_file(p,
               "#fa-opd-demos v1 env=umaze state_dim=4 action_dim=2 seed=0 trajs=1\n"
               "0.1,zebra,0.3,0.4,0.5,0.6\n"
               "---\n");
    CHECK_THROWS_WITH_AS(load_demos(p), doctest::Contains("malformed"), IoError);

    write_file(p,
               "#fa-opd-demos v1 env=umaze state_dim=4 action_dim=2 seed=0 trajs=3\n"
               "0.1,0.2,0.3,0.4,0.5,0.6\n"
               "---\n");
    CHECK_THROWS_WITH_AS(load_demos(p), doctest::Contains("trajs"), IoError);
    std::remove(p.c_str());
}
