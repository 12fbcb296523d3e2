#include "doctest.h"

#include <cmath>

#include "faopd/env.hpp"
#include "faopd/expert.hpp"

using namespace faopd;

namespace {

bool inside_any_wall(const EnvSpec& spec, const Vec2& p) {
    for (const RectWall& w : spec.walls) {
        if (w.contains_strict(p)) return true;
    }
    return false;
}

// Random state with a wall-free position, rejection sampled.
EnvState random_state(const EnvSpec& spec, Rng& rng) {
    EnvState st;
    do {
        st.position = {rng.uniform(), rng.uniform()};
    } while (inside_any_wall(spec, st.position));
    st.goal = spec.goal_region.sample(rng);
    return st;
}

bool run_expert_episode(const EnvSpec& spec, std::uint64_t seed) {
    EnvState st = env_reset(spec, seed);
    while (true) {
        StepResult r = env_step(spec, st, scripted_expert(spec, st, seed));
        if (r.transition.done) return r.transition.success;
        st = r.next;
    }
}

}  // namespace

TEST_CASE("env_reset is deterministic under seed") {
    const EnvSpec spec = EnvSpec::make("umaze");
    const EnvState a = env_reset(spec, 0);
    const EnvState b = env_reset(spec, 0);
    CHECK(a.position.x == b.position.x);
    CHECK(a.position.y == b.position.y);
    CHECK(a.goal.x == b.goal.x);
    CHECK(a.goal.y == b.goal.y);
    CHECK(a.step_index == 0);
}

TEST_CASE("env_reset never starts inside a wall") {
    for (const char* name : {"open", "umaze", "two-mode-maze"}) {
        const EnvSpec spec = EnvSpec::make(name);
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            const EnvState st = env_reset(spec, seed);
            CHECK_FALSE(inside_any_wall(spec, st.position));
            CHECK_FALSE(inside_any_wall(spec, st.goal));
        }
    }
}

TEST_CASE("two-mode-maze resets cover both sides of the start region") {
    const EnvSpec spec = EnvSpec::make("two-mode-maze");
    int left = 0, right = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const EnvState st = env_reset(spec, seed);
        (st.position.x < 0.5 ? left : right)++;
    }
    // Uniform over [0.4, 0.6]: binomial(1000, 1/2), 3 sigma ~ 47.
    CHECK(left > 400);
    CHECK(right > 400);
}

TEST_CASE("unknown env spec name raises a config error") {
    CHECK_THROWS_AS(EnvSpec::make("mujoco"), ConfigError);
}

TEST_CASE("zero action leaves the position unchanged; done only at horizon") {
    const EnvSpec spec = EnvSpec::make("open");
    EnvState st;
    st.position = {0.3, 0.3};
    st.goal = {0.8, 0.8};
    for (int i = 0; i < EnvSpec::kHorizon; ++i) {
        StepResult r = env_step(spec, st, Action{});
        CHECK(r.next.position.x == 0.3);
        CHECK(r.next.position.y == 0.3);
        CHECK(r.transition.success == false);
        CHECK(r.transition.done == (i + 1 == EnvSpec::kHorizon));
        st = r.next;
    }
}

TEST_CASE("open-field step arithmetic: (0.5,0.5) + dt*(1,0) = (0.55,0.5)") {
    const EnvSpec spec = EnvSpec::make("open");
    EnvState st;
    st.position = {0.5, 0.5};
    st.goal = {0.9, 0.9};
    StepResult r = env_step(spec, st, Action{{1.0, 0.0}});
    CHECK(r.next.position.x == doctest::Approx(0.55).epsilon(1e-15));
    CHECK(r.next.position.y == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("action components are clipped to [-1,1] before dynamics") {
    const EnvSpec spec = EnvSpec::make("open");
    EnvState st;
    st.position = {0.5, 0.5};
    st.goal = {0.9, 0.9};
    StepResult r = env_step(spec, st, Action{{25.0, -8.0}});
    CHECK(r.next.position.x == doctest::Approx(0.55).epsilon(1e-15));
    CHECK(r.next.position.y == doctest::Approx(0.45).epsilon(1e-15));
    CHECK(r.transition.action.v[0] == 1.0);
    CHECK(r.transition.action.v[1] == -1.0);
}

TEST_CASE("a step crossing a wall stops at the contact point minus the margin") {
    const EnvSpec spec = EnvSpec::make("umaze");  // wall y in [0.45,0.55], x in [0,0.7]
    EnvState st;
    st.position = {0.3, 0.43};
    st.goal = {0.9, 0.9};
    StepResult r = env_step(spec, st, Action{{0.0, 1.0}});
    // Segment (0.3,0.43) -> (0.3,0.48); contact at y=0.45; oracle:
    // distance to contact = 0.02, so the mover halts at 0.45 - 1e-6.
    CHECK(r.next.position.x == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(r.next.position.y == doctest::Approx(0.45 - 1e-6).epsilon(1e-12));

    // Diagonal contact; independent slab computation puts entry at
    // t = 0.5 of the segment (0.2,0.40)->(0.24,0.46), i.e. (0.22,0.43)...
    EnvState st2;
    st2.position = {0.2, 0.40};
    st2.goal = {0.9, 0.9};
    StepResult r2 = env_step(spec, st2, Action{{0.8, 1.0}});
    // target = (0.24, 0.45); y enters the slab at t = (0.45-0.40)/0.05 = 1.0
    // (corner graze, open interior): no truncation.
    CHECK(r2.next.position.x == doctest::Approx(0.24).epsilon(1e-12));
    CHECK(r2.next.position.y == doctest::Approx(0.45).epsilon(1e-12));
}

TEST_CASE("movement is truncated at the unit-square border") {
    const EnvSpec spec = EnvSpec::make("open");
    EnvState st;
    st.position = {0.99, 0.5};
    st.goal = {0.2, 0.2};
    StepResult r = env_step(spec, st, Action{{1.0, 0.0}});
    CHECK(r.next.position.x == 1.0);
    CHECK(r.next.position.y == 0.5);
}

TEST_CASE("success fires within the radius and ends the episode") {
    const EnvSpec spec = EnvSpec::make("open");
    EnvState st;
    st.position = {0.50, 0.50};
    st.goal = {0.56, 0.50};
    StepResult r = env_step(spec, st, Action{{1.0, 0.0}});
    CHECK(dist(r.next.position, st.goal) < EnvSpec::kSuccessRadius);
    CHECK(r.transition.success);
    CHECK(r.transition.done);
    CHECK(r.transition.diag_env_reward() == doctest::Approx(-0.01).epsilon(1e-12));
}

TEST_CASE("wall safety holds over 1e5 random steps") {
    for (const char* name : {"umaze", "two-mode-maze"}) {
        const EnvSpec spec = EnvSpec::make(name);
        Rng rng(2024);
        for (int i = 0; i < 50000; ++i) {
            EnvState st = random_state(spec, rng);
            Action a{{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)}};
            StepResult r = env_step(spec, st, a);
            REQUIRE_FALSE(inside_any_wall(spec, st.position));
            REQUIRE_FALSE(inside_any_wall(spec, r.next.position));
            REQUIRE(r.next.position.x >= 0.0);
            REQUIRE(r.next.position.x <= 1.0);
            REQUIRE(r.next.position.y >= 0.0);
            REQUIRE(r.next.position.y <= 1.0);
        }
    }
}

TEST_CASE("scripted expert succeeds from any start on the open field") {
    const EnvSpec spec = EnvSpec::make("open");
    for (std::uint64_t seed = 0; seed < 100; ++seed) CHECK(run_expert_episode(spec, seed));
}

TEST_CASE("expert competence: success rate 1.0 on umaze, >= 0.98 on two-mode-maze") {
    const EnvSpec umaze = EnvSpec::make("umaze");
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) ok += run_expert_episode(umaze, seed);
    CHECK(ok == 100);

    const EnvSpec tmm = EnvSpec::make("two-mode-maze");
    ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) ok += run_expert_episode(tmm, seed);
    CHECK(ok >= 98);
}

TEST_CASE("expert at the goal emits a near-zero action") {
    const EnvSpec spec = EnvSpec::make("umaze");
    EnvState st;
    st.position = {0.2, 0.8};
    st.goal = {0.2, 0.8};
    const Action a = scripted_expert(spec, st, 5);
    CHECK(std::sqrt(a.v[0] * a.v[0] + a.v[1] * a.v[1]) < 0.1);
}

TEST_CASE("two-mode expert takes the left route about 40% of the time") {
    const EnvSpec spec = EnvSpec::make("two-mode-maze");
    int left = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        if (expert_route_index(spec, seed) == 0) ++left;
    }
    const double frac = left / 1000.0;
    CHECK(frac > 0.35);
    CHECK(frac < 0.45);
}

TEST_CASE("diagnostic reward reads are counted by the tripwire") {
    const EnvSpec spec = EnvSpec::make("open");
    EnvState st;
    st.position = {0.3, 0.3};
    st.goal = {0.8, 0.8};
    StepResult r = env_step(spec, st, Action{{0.5, 0.5}});
    reset_diag_reward_reads();
    CHECK(diag_reward_reads() == 0);
    (void)r.transition.diag_env_reward();
    (void)r.transition.diag_env_reward();
    CHECK(diag_reward_reads() == 2);
    reset_diag_reward_reads();
}
