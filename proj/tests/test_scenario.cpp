#include <doctest.h>

#include "test_support.hpp"
#include "uavnet/scenario.hpp"

using namespace uavnet;

TEST_CASE("paper setup validates clean") {
    Scenario s = test::paper_scenario();
    CHECK(scenario_violations(s).empty());
    Scenario same = validate_scenario(s);
    CHECK(same.n_slots == s.n_slots);
    CHECK(same.uavs[1].initial_position.x == s.uavs[1].initial_position.x);
    CHECK(same.seed == s.seed);
}

TEST_CASE("validation is idempotent on a valid scenario") {
    Scenario s = test::paper_scenario();
    Scenario v1 = validate_scenario(s);
    Scenario v2 = validate_scenario(v1);
    CHECK(v2.users.size() == v1.users.size());
    for (std::size_t k = 0; k < v1.users.size(); ++k) {
        CHECK(v2.users[k].position.x == v1.users[k].position.x);
        CHECK(v2.users[k].position.y == v1.users[k].position.y);
    }
}

TEST_CASE("coincident UAVs violate the separation floor") {
    Scenario s = test::paper_scenario();
    s.uavs[0].initial_position = {0.0, 0.0};
    s.uavs[1].initial_position = {0.0, 0.0};
    auto issues = scenario_violations(s);
    REQUIRE(!issues.empty());
    bool found = false;
    for (const auto& i : issues)
        if (i.find("initial separation below D_min") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("failure slot bounds") {
    Scenario s = test::paper_scenario();
    s.failures.push_back({0, 0});
    auto issues = scenario_violations(s);
    bool found = false;
    for (const auto& i : issues)
        if (i.find("failure slot out of range") != std::string::npos) found = true;
    CHECK(found);

    s.failures.back().slot = s.n_slots + 1;
    issues = scenario_violations(s);
    found = false;
    for (const auto& i : issues)
        if (i.find("failure slot out of range") != std::string::npos) found = true;
    CHECK(found);

    // slot 2 is the earliest admissible failure
    s.failures.back().slot = 2;
    CHECK(scenario_violations(s).empty());
}

TEST_CASE("complete violation list is reported at once") {
    Scenario s = test::paper_scenario();
    s.n_slots = 0;
    s.d_max = -1.0;
    s.uavs[0].bandwidth_budget = 0.0;
    try {
        validate_scenario(s);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.issues().size() >= 3);
    }
}

TEST_CASE("all UAVs failing is rejected") {
    Scenario s = test::paper_scenario();
    s.failures = {{0, 5}, {1, 7}, {2, 11}};
    auto issues = scenario_violations(s);
    bool found = false;
    for (const auto& i : issues)
        if (i.find("no UAV alive") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("zero-failure scenario stays valid and single-period") {
    Scenario s = test::paper_scenario();
    s.failures.clear();
    CHECK(scenario_violations(s).empty());
    CHECK(s.failure_slots().empty());
    CHECK(s.alive_count(s.n_slots) == 3);
}

TEST_CASE("alive mask follows the failure schedule") {
    Scenario s = test::paper_scenario_with_failure(11, 2);
    CHECK(s.alive(2, 10));
    CHECK(!s.alive(2, 11));
    CHECK(!s.alive(2, 20));
    CHECK(s.alive(0, 20));
    auto mask = s.alive_mask(11);
    CHECK(mask == std::vector<std::uint8_t>{1, 1, 0});
}
