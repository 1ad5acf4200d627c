#include "uavnet/sim_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "uavnet/errors.hpp"
#include "uavnet/risk_utility.hpp"

namespace uavnet {

const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::pro_alg: return "pro_alg";
        case Scheme::sr_max: return "sr_max";
        case Scheme::baseline1: return "baseline1";
        case Scheme::baseline2: return "baseline2";
    }
    return "unknown";
}

Scheme scheme_from_string(const std::string& name) {
    if (name == "pro_alg") return Scheme::pro_alg;
    if (name == "sr_max") return Scheme::sr_max;
    if (name == "baseline1") return Scheme::baseline1;
    if (name == "baseline2") return Scheme::baseline2;
    throw ConfigError("unknown scheme: " + name);
}

namespace {

struct SegmentPlan {
    Plan plan;
    ConvergenceTrace trace;
    bool has_trace = false;
};

SegmentPlan plan_segment(const Scenario& sc, const ChannelRealization& plan_real, Window window,
                         const std::vector<Vec2>& anchors, const std::vector<std::uint8_t>& alive,
                         Scheme scheme, double mu, const EpisodeOptions& opt,
                         const std::vector<double>& history) {
    SegmentPlan out;
    PlannerSettings settings = opt.planner;
    switch (scheme) {
        case Scheme::pro_alg: {
            settings.risk = RiskConfig::from_mu(mu);
            PlanResult r = ao_optimize(sc, plan_real, window, anchors, alive, settings, history);
            out.plan = std::move(r.plan);
            out.trace = std::move(r.trace);
            out.has_trace = true;
            break;
        }
        case Scheme::sr_max: {
            PlanResult r = sr_max(sc, plan_real, window, anchors, alive, settings, history);
            out.plan = std::move(r.plan);
            out.trace = std::move(r.trace);
            out.has_trace = true;
            break;
        }
        case Scheme::baseline1:
            out.plan = nearest_equal_plan(sc, window, anchors, alive);
            break;
        case Scheme::baseline2: {
            PlanResult r = placement_plan(sc, plan_real, window, anchors, alive, settings);
            out.plan = std::move(r.plan);
            out.trace = std::move(r.trace);
            out.has_trace = true;
            break;
        }
    }
    return out;
}

/// One-slot continuation of a plan: hold the last slot's decisions.
Plan held_plan(const Plan& prev, int slot) {
    Plan held = Plan::make(prev.n_uav, prev.n_user, Window{slot, slot});
    held.binary_flag = prev.binary_flag;
    int last = prev.window.last;
    for (std::size_t u = 0; u < prev.n_uav; ++u) {
        held.pos_at(u, slot) = prev.pos_at(u, last);
        for (std::size_t k = 0; k < prev.n_user; ++k) {
            held.assoc_at(u, k, slot) = prev.assoc_at(u, k, last);
            held.bw_at(u, k, slot) = prev.bw_at(u, k, last);
        }
    }
    return held;
}

}  // namespace

EpisodeMetrics run_episode(const Scenario& raw, Scheme scheme, double mu, std::uint64_t seed,
                           const EpisodeOptions& options) {
    const Scenario scenario = validate_scenario(raw);
    const std::size_t n_users = scenario.n_users();
    const int n_slots = scenario.n_slots;

    EpisodeMetrics m;
    m.scheme = to_string(scheme);
    m.mu = scheme == Scheme::pro_alg ? mu : 0.0;
    m.seed = seed;
    m.n_users = n_users;
    m.n_slots = static_cast<std::size_t>(n_slots);
    m.slot_sums.assign(static_cast<std::size_t>(n_slots), 0.0);
    m.user_rates.assign(n_users * static_cast<std::size_t>(n_slots), 0.0);

    const ChannelRealization real = draw_fading(scenario, Window{1, n_slots}, seed);
    const ChannelRealization plan_real =
        options.expected_fading ? unit_fading(scenario, Window{1, n_slots}) : real;

    auto record = [&](const Plan& plan, int slot) {
        double sum = 0.0;
        for (std::size_t k = 0; k < n_users; ++k) {
            double r = user_rate(plan, real, scenario, k, slot);
            m.user_rates[k * static_cast<std::size_t>(n_slots) +
                         static_cast<std::size_t>(slot - 1)] = r;
            sum += r;
        }
        m.slot_sums[static_cast<std::size_t>(slot - 1)] = sum;
    };

    std::vector<int> fails = scenario.failure_slots();
    std::vector<Vec2> anchors(scenario.n_uavs());
    for (std::size_t u = 0; u < scenario.n_uavs(); ++u)
        anchors[u] = scenario.uavs[u].initial_position;
    std::vector<std::uint8_t> alive(scenario.n_uavs(), 1);

    Plan last_plan;
    bool have_plan = false;
    int pos = 1;
    for (std::size_t fi = 0; fi <= fails.size(); ++fi) {
        int seg_end = fi < fails.size() ? fails[fi] - 1 : n_slots;
        if (pos <= seg_end) {
            Window window{pos, seg_end};
            std::vector<double> history(m.slot_sums.begin(),
                                        m.slot_sums.begin() + (pos - 1));
            SegmentPlan seg = plan_segment(scenario, plan_real, window, anchors, alive, scheme,
                                           mu, options, history);
            if (seg.has_trace) {
                m.iterations += seg.trace.iterations;
                m.traces.push_back(std::move(seg.trace));
            }
            for (int slot = window.first; slot <= window.last; ++slot)
                record(seg.plan, slot);
            for (std::size_t u = 0; u < scenario.n_uavs(); ++u)
                anchors[u] = seg.plan.pos_at(u, window.last);
            last_plan = std::move(seg.plan);
            have_plan = true;
            pos = seg_end + 1;
        }
        if (fi < fails.size()) {
            int fslot = fails[fi];
            // The failure is unknown in advance: the stale plan runs through
            // the failure slot with the dead UAV silent.
            Plan held = have_plan ? held_plan(last_plan, fslot)
                                  : Plan::make(scenario.n_uavs(), n_users, Window{fslot, fslot});
            record(held, fslot);
            for (std::size_t u = 0; u < scenario.n_uavs(); ++u)
                anchors[u] = held.pos_at(u, fslot);
            last_plan = std::move(held);
            have_plan = true;
            alive = scenario.alive_mask(fslot);
            pos = fslot + 1;
        }
    }

    int p1_end = fails.empty() ? n_slots : fails.front() - 1;
    m.avg_rate_p1 = population_mean(
        std::span<const double>(m.slot_sums.data(), static_cast<std::size_t>(p1_end)));
    if (fails.empty())
        m.avg_rate_p2 = m.avg_rate_p1;
    else
        m.avg_rate_p2 = population_mean(std::span<const double>(
            m.slot_sums.data() + p1_end, static_cast<std::size_t>(n_slots - p1_end)));
    m.variance = sum_rate_variance(m.slot_sums);

    std::vector<double> user_means(n_users);
    for (std::size_t k = 0; k < n_users; ++k)
        user_means[k] = population_mean(std::span<const double>(
            m.user_rates.data() + k * static_cast<std::size_t>(n_slots),
            static_cast<std::size_t>(n_slots)));
    m.jain = jain_index(user_means);
    return m;
}

std::vector<EpisodeMetrics> sweep_mu(const Scenario& scenario, std::span<const double> mus,
                                     std::span<const std::uint64_t> seeds,
                                     const EpisodeOptions& options, int max_workers) {
    for (double mu : mus)
        if (mu > 0.0) throw ConfigError("sweep requires mu <= 0");

    struct Job {
        Scheme scheme;
        double mu;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (double mu : mus)
        for (std::uint64_t s : seeds) jobs.push_back({Scheme::pro_alg, mu, s});
    for (Scheme sch : {Scheme::sr_max, Scheme::baseline1, Scheme::baseline2})
        for (std::uint64_t s : seeds) jobs.push_back({sch, 0.0, s});

    std::vector<EpisodeMetrics> results(jobs.size());
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    std::size_t workers = max_workers > 0 ? static_cast<std::size_t>(max_workers) : hw;
    workers = std::min(workers, jobs.size());

    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                results[i] =
                    run_episode(scenario, jobs[i].scheme, jobs[i].mu, jobs[i].seed, options);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

}  // namespace uavnet
