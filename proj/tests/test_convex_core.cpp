#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "uavnet/convex_core.hpp"
#include "uavnet/rng.hpp"

using namespace uavnet;

namespace {

ConcaveProgram half_parabola() {
    // maximize -(x-1)^2 subject to x <= 0
    ConcaveProgram p;
    p.dim = 1;
    p.objective = [](std::span<const double> x, std::span<double> g) {
        if (!g.empty()) g[0] = -2.0 * (x[0] - 1.0);
        return -(x[0] - 1.0) * (x[0] - 1.0);
    };
    IneqConstraint c;
    c.name = "x<=0";
    c.eval = [](std::span<const double> x, std::span<double> g) {
        if (!g.empty()) g[0] = 1.0;
        return x[0];
    };
    p.ineqs.push_back(std::move(c));
    p.start = {-0.5};
    return p;
}

ConcaveProgram simplex_log() {
    // maximize sum log(x_i) subject to sum x_i = 1, x_i >= 0
    ConcaveProgram p;
    p.dim = 3;
    p.objective = [](std::span<const double> x, std::span<double> g) {
        double f = 0.0;
        for (int i = 0; i < 3; ++i) {
            f += std::log(x[i]);
            if (!g.empty()) g[i] = 1.0 / x[i];
        }
        return f;
    };
    p.eq_rows = {{1.0, 1.0, 1.0}};
    p.eq_rhs = {1.0};
    p.lower = {0.0, 0.0, 0.0};
    p.upper = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity()};
    p.start = {0.3, 0.3, 0.4};
    return p;
}

/// Dense concave quadratic -(x-a)' Q (x-a) with box [-1, 1]^d.
struct Quadratic {
    int dim;
    std::vector<double> q;  // row-major SPD
    std::vector<double> a;

    double value(std::span<const double> x) const {
        double f = 0.0;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                f -= (x[i] - a[static_cast<std::size_t>(i)]) *
                     q[static_cast<std::size_t>(i * dim + j)] *
                     (x[j] - a[static_cast<std::size_t>(j)]);
        return f;
    }
    void grad(std::span<const double> x, std::span<double> g) const {
        for (int i = 0; i < dim; ++i) {
            g[i] = 0.0;
            for (int j = 0; j < dim; ++j)
                g[i] -= 2.0 * q[static_cast<std::size_t>(i * dim + j)] *
                        (x[j] - a[static_cast<std::size_t>(j)]);
        }
    }
};

Quadratic random_spd_quadratic(SplitMix64& gen, int dim) {
    Quadratic quad;
    quad.dim = dim;
    quad.q.assign(static_cast<std::size_t>(dim * dim), 0.0);
    // Q = M' M + 0.1 I
    std::vector<double> m(static_cast<std::size_t>(dim * dim));
    for (auto& v : m) v = gen.next_double() * 2.0 - 1.0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            double acc = i == j ? 0.1 : 0.0;
            for (int r = 0; r < dim; ++r)
                acc += m[static_cast<std::size_t>(r * dim + i)] *
                       m[static_cast<std::size_t>(r * dim + j)];
            quad.q[static_cast<std::size_t>(i * dim + j)] = acc;
        }
    quad.a.resize(static_cast<std::size_t>(dim));
    for (auto& v : quad.a) v = gen.next_double() * 2.4 - 1.2;  // optimum may leave the box
    return quad;
}

ConcaveProgram box_program(const Quadratic& quad) {
    ConcaveProgram p;
    p.dim = quad.dim;
    p.objective = [quad](std::span<const double> x, std::span<double> g) {
        if (!g.empty()) quad.grad(x, g);
        return quad.value(x);
    };
    p.lower.assign(static_cast<std::size_t>(quad.dim), -1.0);
    p.upper.assign(static_cast<std::size_t>(quad.dim), 1.0);
    p.start.assign(static_cast<std::size_t>(quad.dim), 0.0);
    return p;
}

}  // namespace

TEST_CASE("projected unconstrained optimum onto a halfline") {
    auto rep = maximize(half_parabola());
    CHECK(rep.status == SolveStatus::converged);
    CHECK(rep.solution[0] == doctest::Approx(0.0).epsilon(1e-5));
    CHECK(rep.objective == doctest::Approx(-1.0).epsilon(1e-5));
}

TEST_CASE("simplex log barrier finds the symmetric point") {
    auto rep = maximize(simplex_log());
    CHECK(rep.status == SolveStatus::converged);
    for (int i = 0; i < 3; ++i)
        CHECK(rep.solution[static_cast<std::size_t>(i)] ==
              doctest::Approx(1.0 / 3.0).epsilon(1e-5));
    CHECK(rep.objective == doctest::Approx(-3.0 * std::log(3.0)).epsilon(1e-6));
}

TEST_CASE("random 2-D quadratics match an exhaustive grid search") {
    SplitMix64 gen(13);
    for (int trial = 0; trial < 4; ++trial) {
        Quadratic quad = random_spd_quadratic(gen, 2);
        auto rep = maximize(box_program(quad));

        // grid-search oracle, step 1e-3 over the box
        double best = -1e300;
        const double step = 1e-3;
        std::vector<double> x(2);
        for (int i = 0; i <= 2000; ++i) {
            x[0] = -1.0 + step * i;
            for (int j = 0; j <= 2000; ++j) {
                x[1] = -1.0 + step * j;
                best = std::max(best, quad.value(x));
            }
        }
        CHECK(std::abs(rep.objective - best) < 5e-3);
    }
}

TEST_CASE("separable 6-D quadratics match the clamp formula") {
    SplitMix64 gen(14);
    for (int trial = 0; trial < 5; ++trial) {
        Quadratic quad = random_spd_quadratic(gen, 6);
        // keep only the diagonal so the optimum is the coordinatewise clamp
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                if (i != j) quad.q[static_cast<std::size_t>(i * 6 + j)] = 0.0;
        auto rep = maximize(box_program(quad));

        std::vector<double> star(6);
        for (int i = 0; i < 6; ++i)
            star[static_cast<std::size_t>(i)] =
                std::min(1.0, std::max(-1.0, quad.a[static_cast<std::size_t>(i)]));
        double expected = quad.value(star);
        CHECK(rep.objective == doctest::Approx(expected).epsilon(1e-4));
    }
}

TEST_CASE("outer objective sequence is nondecreasing") {
    SplitMix64 gen(15);
    for (int trial = 0; trial < 5; ++trial) {
        Quadratic quad = random_spd_quadratic(gen, 4);
        auto rep = maximize(box_program(quad));
        REQUIRE(!rep.outer_objectives.empty());
        for (std::size_t i = 1; i < rep.outer_objectives.size(); ++i)
            CHECK(rep.outer_objectives[i] >=
                  rep.outer_objectives[i - 1] - 1e-9 * (1.0 + std::abs(rep.outer_objectives[i])));
    }
}

TEST_CASE("identical programs yield identical reports") {
    SplitMix64 gen(16);
    Quadratic quad = random_spd_quadratic(gen, 3);
    auto a = maximize(box_program(quad));
    auto b = maximize(box_program(quad));
    CHECK(a.solution == b.solution);
    CHECK(a.objective == b.objective);
    CHECK(a.inner_iterations == b.inner_iterations);
    CHECK(a.outer_iterations == b.outer_iterations);
}

TEST_CASE("converged reports satisfy the scaled residual contract") {
    auto rep = maximize(simplex_log());
    REQUIRE(rep.status == SolveStatus::converged);
    CHECK(rep.max_violation <= 1e-7);
    CHECK(rep.stationarity <= 1e-5);
}

TEST_CASE("infeasible start is rejected") {
    auto p = half_parabola();
    p.start = {0.5};
    CHECK_THROWS_AS(maximize(p), std::invalid_argument);
}

TEST_CASE("kkt residuals") {
    SUBCASE("at the simplex-log optimum") {
        auto p = simplex_log();
        auto rep = maximize(p);
        auto kkt = check_kkt(p, rep.solution);
        CHECK(kkt.max_residual < 1e-5);
    }
    SUBCASE("interior non-optimal point of an unconstrained quadratic") {
        ConcaveProgram p;
        p.dim = 2;
        p.objective = [](std::span<const double> x, std::span<double> g) {
            if (!g.empty()) {
                g[0] = -2.0 * x[0];
                g[1] = -2.0 * x[1];
            }
            return -x[0] * x[0] - x[1] * x[1];
        };
        p.start = {0.0, 0.0};
        std::vector<double> point{1.0, 2.0};
        auto kkt = check_kkt(p, point);
        CHECK(kkt.projected_gradient ==
              doctest::Approx(std::sqrt(4.0 + 16.0)).epsilon(1e-12));
        CHECK(kkt.complementarity == 0.0);
        CHECK(kkt.equality_residual == 0.0);
    }
    SUBCASE("infeasible point raises naming the constraint") {
        auto p = half_parabola();
        std::vector<double> point{1e-3};
        CHECK_THROWS_WITH_AS(check_kkt(p, point),
                             doctest::Contains("x<=0"), std::invalid_argument);
    }
}

TEST_CASE("debug trace CSV is written behind the flag") {
    auto p = simplex_log();
    SolveSettings s;
    s.debug_trace = true;
    auto path = std::filesystem::temp_directory_path() / "uavnet_trace_test.csv";
    s.trace_path = path.string();
    maximize(p, s);
    std::ifstream f(path);
    REQUIRE(f.good());
    std::string header;
    std::getline(f, header);
    CHECK(header == "outer,inner,t,objective,stationarity");
    std::filesystem::remove(path);
}
