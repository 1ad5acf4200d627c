#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "test_support.hpp"
#include "uavnet/channel.hpp"
#include "uavnet/rng.hpp"

using namespace uavnet;

namespace {

/// Independent scalar recomputation of the rate chain (second code path for
/// the oracle checks): no shared helpers with the library internals.
double naive_user_rate(const Plan& plan, const ChannelRealization& real, const Scenario& sc,
                       std::size_t k, int slot) {
    double rate = 0.0;
    for (std::size_t u = 0; u < sc.n_uavs(); ++u) {
        if (!sc.alive(u, slot)) continue;
        double a = plan.assoc_at(u, k, slot);
        if (a == 0.0) continue;
        double dx = plan.pos_at(u, slot).x - sc.users[k].position.x;
        double dy = plan.pos_at(u, slot).y - sc.users[k].position.y;
        double hu = sc.channel.ref_gain_rho * real.at(u, k, slot) /
                    (dx * dx + dy * dy + sc.altitude_h * sc.altitude_h);
        double interf = 0.0;
        for (std::size_t i = 0; i < sc.n_uavs(); ++i) {
            if (i == u || !sc.alive(i, slot)) continue;
            double ix = plan.pos_at(i, slot).x - sc.users[k].position.x;
            double iy = plan.pos_at(i, slot).y - sc.users[k].position.y;
            double hi = sc.channel.ref_gain_rho * real.at(i, k, slot) /
                        (ix * ix + iy * iy + sc.altitude_h * sc.altitude_h);
            interf += hi * sc.uavs[i].tx_power;
        }
        double sinr = hu * sc.uavs[u].tx_power / (interf + sc.channel.noise_power);
        rate += a * plan.bw_at(u, k, slot) * std::log2(1.0 + sinr);
    }
    return rate;
}

}  // namespace

TEST_CASE("pure LoS fading has unit power") {
    Scenario s = test::paper_scenario(2);
    s.channel.rician_m = 1e12;
    auto r = draw_fading(s, {1, 5}, 7);
    for (std::size_t u = 0; u < r.n_uav; ++u)
        for (std::size_t k = 0; k < r.n_user; ++k)
            for (int n = 1; n <= 5; ++n) CHECK(r.at(u, k, n) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("Rayleigh limit: unit-mean exponential power") {
    // Monte Carlo oracle on the closed-form Rayleigh power distribution
    Scenario s = test::paper_scenario(1);
    s.channel.rician_m = 0.0;
    s.n_slots = 100000;
    s.users.resize(1);
    s.uavs.resize(1);
    auto r = draw_fading(s, {1, s.n_slots}, 11);
    double mean = 0.0;
    for (int n = 1; n <= s.n_slots; ++n) mean += r.at(0, 0, n);
    mean /= s.n_slots;
    CHECK(mean > 0.98);
    CHECK(mean < 1.02);

    // second moment of Exp(1) is 2
    double m2 = 0.0;
    for (int n = 1; n <= s.n_slots; ++n) m2 += r.at(0, 0, n) * r.at(0, 0, n);
    m2 /= s.n_slots;
    CHECK(m2 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("fading is deterministic per seed and window-independent") {
    Scenario s = test::paper_scenario(3);
    auto a = draw_fading(s, {1, 20}, 99);
    auto b = draw_fading(s, {1, 20}, 99);
    CHECK(a.hbar == b.hbar);
    auto c = draw_fading(s, {5, 12}, 99);
    for (std::size_t u = 0; u < c.n_uav; ++u)
        for (std::size_t k = 0; k < c.n_user; ++k)
            for (int n = 5; n <= 12; ++n) CHECK(c.at(u, k, n) == a.at(u, k, n));
    auto d = draw_fading(s, {1, 20}, 100);
    CHECK(a.hbar != d.hbar);
}

TEST_CASE("fading mean is unit at the paper Rician factor") {
    Scenario s = test::paper_scenario(3);
    s.n_slots = 20000;
    auto r = draw_fading(s, {1, s.n_slots}, 3);
    double mean = 0.0;
    for (int n = 1; n <= s.n_slots; ++n) mean += r.at(1, 4, n);
    mean /= s.n_slots;
    CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("channel gain closed forms") {
    ChannelParams p;
    p.ref_gain_rho = 0.01;
    CHECK(channel_gain({0, 0}, {0, 0}, 1.0, p, 60.0) ==
          doctest::Approx(2.7777777777777778e-6).epsilon(1e-12));
    CHECK(channel_gain({10, 20}, {30, 40}, 0.0, p, 60.0) == 0.0);
    // gain ratio 4 between hovering overhead and d^2 = 3 H^2 away
    double h = 60.0;
    double d = std::sqrt(3.0) * h;
    double g0 = channel_gain({0, 0}, {0, 0}, 1.0, p, h);
    double g1 = channel_gain({d, 0}, {0, 0}, 1.0, p, h);
    CHECK(g0 / g1 == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("gain times squared distance is constant") {
    ChannelParams p;
    p.ref_gain_rho = 0.037;
    SplitMix64 gen(5);
    for (int i = 0; i < 50; ++i) {
        Vec2 q{gen.next_double() * 500, gen.next_double() * 500};
        Vec2 c{gen.next_double() * 500, gen.next_double() * 500};
        double hbar = 2.0 * gen.next_double();
        double h = 10.0 + 90.0 * gen.next_double();
        double g = channel_gain(q, c, hbar, p, h);
        CHECK(g * (distance_sq(q, c) + h * h) ==
              doctest::Approx(p.ref_gain_rho * hbar).epsilon(1e-12));
    }
}

TEST_CASE("link rate closed forms") {
    double noise = 1e-13;
    SUBCASE("snr one") {
        std::vector<double> gains{noise};
        std::vector<double> powers{1.0};
        CHECK(link_rate(1.0, gains, powers, 0, noise) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("zero bandwidth") {
        std::vector<double> gains{1.0};
        std::vector<double> powers{1.0};
        CHECK(link_rate(0.0, gains, powers, 0, noise) == 0.0);
    }
    SUBCASE("equal-power interferer") {
        std::vector<double> gains{noise, noise};
        std::vector<double> powers{1.0, 1.0};
        CHECK(link_rate(1.0, gains, powers, 0, noise) ==
              doctest::Approx(0.5849625007211562).epsilon(1e-12));
    }
}

TEST_CASE("link rate monotonicity properties") {
    SplitMix64 gen(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 2 + gen.next_u64() % 3;
        std::vector<double> gains(n), powers(n, 0.1);
        for (auto& g : gains) g = 1e-9 * (0.1 + gen.next_double());
        double noise = 1e-13;
        double b = 1e3 * (0.5 + gen.next_double());
        double r0 = link_rate(b, gains, powers, 0, noise);
        // nondecreasing in bandwidth
        CHECK(link_rate(b * 1.7, gains, powers, 0, noise) >= r0 - 1e-12);
        // nondecreasing in own gain
        auto g_up = gains;
        g_up[0] *= 1.5;
        CHECK(link_rate(b, g_up, powers, 0, noise) >= r0 - 1e-12);
        // nonincreasing in an interferer's gain
        auto g_int = gains;
        g_int[1] *= 2.0;
        CHECK(link_rate(b, g_int, powers, 0, noise) <= r0 + 1e-12);
    }
}

TEST_CASE("user and sum rates against an independent recomputation") {
    Scenario s = test::paper_scenario(2, 21);
    s.uavs.resize(2);
    s.users.resize(2);
    s.n_slots = 1;
    auto real = draw_fading(s, {1, 1}, 5);
    SplitMix64 gen(33);
    for (int trial = 0; trial < 30; ++trial) {
        Plan plan = Plan::make(2, 2, {1, 1});
        for (std::size_t u = 0; u < 2; ++u) {
            plan.pos_at(u, 1) = Vec2{gen.next_double() * 500, gen.next_double() * 500};
            for (std::size_t k = 0; k < 2; ++k) {
                plan.assoc_at(u, k, 1) = gen.next_double();
                plan.bw_at(u, k, 1) = gen.next_double() * 5e3;
            }
        }
        double total = 0.0;
        for (std::size_t k = 0; k < 2; ++k) {
            double lib = user_rate(plan, real, s, k, 1);
            double ref = naive_user_rate(plan, real, s, k, 1);
            CHECK(lib == doctest::Approx(ref).epsilon(1e-12));
            total += ref;
        }
        CHECK(sum_rate(plan, real, s, 1) == doctest::Approx(total).epsilon(1e-12));
    }
}

TEST_CASE("binary one-hot plan matches its single link rate") {
    Scenario s = test::paper_scenario(1);
    s.users.resize(1);
    s.n_slots = 1;
    auto real = draw_fading(s, {1, 1}, 5);
    Plan plan = Plan::make(3, 1, {1, 1});
    for (std::size_t u = 0; u < 3; ++u) plan.pos_at(u, 1) = s.uavs[u].initial_position;
    plan.assoc_at(1, 0, 1) = 1.0;
    plan.bw_at(1, 0, 1) = 1e4;
    plan.binary_flag = true;

    std::vector<double> gains(3), powers(3);
    for (std::size_t i = 0; i < 3; ++i) {
        gains[i] = channel_gain(s.uavs[i].initial_position, s.users[0].position,
                                real.at(i, 0, 1), s.channel, s.altitude_h);
        powers[i] = s.uavs[i].tx_power;
    }
    double r = link_rate(1e4, gains, powers, 1, s.channel.noise_power);
    CHECK(user_rate(plan, real, s, 0, 1) == doctest::Approx(r).epsilon(1e-12));

    plan.bw_at(1, 0, 1) = 0.0;
    CHECK(user_rate(plan, real, s, 0, 1) == 0.0);
}

TEST_CASE("removing a non-serving UAV never hurts a user") {
    Scenario s = test::paper_scenario(4, 77);
    s.n_slots = 1;
    auto real = draw_fading(s, {1, 1}, 6);
    SplitMix64 gen(8);
    for (int trial = 0; trial < 40; ++trial) {
        Plan plan = Plan::make(3, 4, {1, 1});
        for (std::size_t u = 0; u < 3; ++u) {
            plan.pos_at(u, 1) = Vec2{gen.next_double() * 500, gen.next_double() * 500};
            for (std::size_t k = 0; k < 4; ++k) plan.bw_at(u, k, 1) = 1e3;
        }
        for (std::size_t k = 0; k < 4; ++k)
            plan.assoc_at(gen.next_u64() % 2, k, 1) = 1.0;  // UAV 2 serves nobody

        Scenario dead = s;
        dead.failures.push_back({2, 1});
        // failure slot 1 is invalid config-wise but exercises the rate path
        for (std::size_t k = 0; k < 4; ++k) {
            double with_u2 = user_rate(plan, real, s, k, 1);
            double without_u2 = user_rate(plan, real, dead, k, 1);
            CHECK(without_u2 >= with_u2 - 1e-12);
        }
    }
}

TEST_CASE("plan feasibility checker flags each constraint") {
    Scenario s = test::paper_scenario();
    auto anchors = test::initial_anchors(s);
    auto alive = test::all_alive(s);
    Window w{1, 3};
    Plan plan = Plan::make(3, s.n_users(), w);
    for (std::size_t u = 0; u < 3; ++u)
        for (int n = 1; n <= 3; ++n) plan.pos_at(u, n) = anchors[u];
    for (std::size_t k = 0; k < s.n_users(); ++k)
        for (int n = 1; n <= 3; ++n) {
            plan.assoc_at(0, k, n) = 1.0;
            plan.bw_at(0, k, n) = 10e3 / static_cast<double>(s.n_users());
        }
    plan.binary_flag = true;
    CHECK(plan_violations(plan, s, anchors, alive).empty());

    SUBCASE("budget") {
        plan.bw_at(0, 0, 2) *= 50.0;
        CHECK(!plan_violations(plan, s, anchors, alive).empty());
    }
    SUBCASE("mobility") {
        plan.pos_at(1, 2) = plan.pos_at(1, 1) + Vec2{26.0, 0.0};
        CHECK(!plan_violations(plan, s, anchors, alive).empty());
    }
    SUBCASE("separation") {
        plan.pos_at(1, 3) = plan.pos_at(0, 3) + Vec2{1.0, 0.0};
        CHECK(!plan_violations(plan, s, anchors, alive).empty());
    }
    SUBCASE("anchor") {
        plan.pos_at(2, 1) = plan.pos_at(2, 1) + Vec2{0.5, 0.0};
        CHECK(!plan_violations(plan, s, anchors, alive).empty());
    }
    SUBCASE("bounds") {
        plan.pos_at(2, 3) = Vec2{-10.0, 10.0};
        CHECK(!plan_violations(plan, s, anchors, alive).empty());
    }
    SUBCASE("one-hot") {
        plan.assoc_at(1, 2, 2) = 1.0;  // second server for user 2
        CHECK(!plan_violations(plan, s, anchors, alive).empty());
    }
}

TEST_CASE("realization CSV audit dump") {
    Scenario s = test::paper_scenario(1);
    s.uavs.resize(1);
    s.users.resize(1);
    auto r = draw_fading(s, {1, 2}, 4);
    auto csv = realization_to_csv(r);
    CHECK(csv.rfind("uav,user,slot,hbar\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows
    CHECK(csv == realization_to_csv(r));
}
