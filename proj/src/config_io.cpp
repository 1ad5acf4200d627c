#include "uavnet/config_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "uavnet/errors.hpp"
#include "uavnet/rng.hpp"

namespace uavnet {

namespace {

using nlohmann::json;

struct Diagnostics {
    std::vector<std::string> issues;

    void add(const std::string& msg) { issues.push_back(msg); }
    void raise_if_any() const {
        if (issues.empty()) return;
        std::ostringstream os;
        os << "config error (" << issues.size() << " issue" << (issues.size() == 1 ? "" : "s")
           << "):";
        for (const auto& i : issues) os << "\n  - " << i;
        throw ConfigError(os.str());
    }
};

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed, Diagnostics& diag) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            diag.add(where + ": unknown field \"" + it.key() + "\"");
}

double get_number(const json& obj, const std::string& where, const std::string& key,
                  Diagnostics& diag, bool& ok) {
    if (!obj.contains(key)) {
        diag.add(where + ": missing field \"" + key + "\"");
        ok = false;
        return 0.0;
    }
    if (!obj[key].is_number()) {
        diag.add(where + ": field \"" + key + "\" must be a number");
        ok = false;
        return 0.0;
    }
    return obj[key].get<double>();
}

double opt_number(const json& obj, const std::string& where, const std::string& key,
                  double fallback, Diagnostics& diag) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) {
        diag.add(where + ": field \"" + key + "\" must be a number");
        return fallback;
    }
    return obj[key].get<double>();
}

bool get_vec2(const json& obj, const std::string& where, const std::string& key, Vec2& out,
              Diagnostics& diag) {
    if (!obj.contains(key)) {
        diag.add(where + ": missing field \"" + key + "\"");
        return false;
    }
    const json& v = obj[key];
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        diag.add(where + ": field \"" + key + "\" must be [x, y]");
        return false;
    }
    out = Vec2{v[0].get<double>(), v[1].get<double>()};
    return true;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

ParsedConfig parse_json(const json& root) {
    Diagnostics diag;
    ParsedConfig out;
    Scenario& sc = out.scenario;

    if (!root.is_object()) {
        diag.add("top level must be a JSON object");
        diag.raise_if_any();
    }

    check_keys(root, "top level",
               {"uavs", "users", "channel", "n_slots", "slot_bounds", "altitude_h", "d_max",
                "d_min", "failures", "seed", "settings"},
               diag);

    // uavs
    if (!root.contains("uavs") || !root["uavs"].is_array()) {
        diag.add("\"uavs\" must be an array");
    } else {
        int auto_id = 0;
        for (const auto& j : root["uavs"]) {
            std::string where = "uavs[" + std::to_string(auto_id) + "]";
            if (!j.is_object()) {
                diag.add(where + ": must be an object");
                ++auto_id;
                continue;
            }
            check_keys(j, where, {"id", "initial_position", "bandwidth_budget", "tx_power"},
                       diag);
            UavConfig u;
            u.id = j.contains("id") && j["id"].is_number_integer() ? j["id"].get<int>() : auto_id;
            if (j.contains("id") && !j["id"].is_number_integer())
                diag.add(where + ": field \"id\" must be an integer");
            bool ok = true;
            get_vec2(j, where, "initial_position", u.initial_position, diag);
            u.bandwidth_budget = get_number(j, where, "bandwidth_budget", diag, ok);
            u.tx_power = opt_number(j, where, "tx_power", 0.1, diag);
            sc.uavs.push_back(u);
            ++auto_id;
        }
    }

    // users (optional; generated from the seed when absent)
    bool have_users = root.contains("users");
    if (have_users) {
        if (!root["users"].is_array()) {
            diag.add("\"users\" must be an array");
        } else {
            int idx = 0;
            for (const auto& j : root["users"]) {
                std::string where = "users[" + std::to_string(idx) + "]";
                if (!j.is_object()) {
                    diag.add(where + ": must be an object");
                    ++idx;
                    continue;
                }
                check_keys(j, where, {"id", "position"}, diag);
                UserSite k;
                k.id = j.contains("id") && j["id"].is_number_integer() ? j["id"].get<int>() : idx;
                if (j.contains("id") && !j["id"].is_number_integer())
                    diag.add(where + ": field \"id\" must be an integer");
                get_vec2(j, where, "position", k.position, diag);
                sc.users.push_back(k);
                ++idx;
            }
        }
    }

    // channel: linear or dB variants, exactly one of each pair
    if (!root.contains("channel") || !root["channel"].is_object()) {
        diag.add("\"channel\" must be an object");
    } else {
        const json& ch = root["channel"];
        check_keys(ch, "channel",
                   {"ref_gain_rho", "ref_gain_rho_db", "rician_m", "rician_m_db", "noise_power"},
                   diag);
        bool ok = true;
        if (ch.contains("ref_gain_rho") && ch.contains("ref_gain_rho_db"))
            diag.add("channel: give only one of ref_gain_rho / ref_gain_rho_db");
        else if (ch.contains("ref_gain_rho_db"))
            sc.channel.ref_gain_rho = db_to_linear(get_number(ch, "channel", "ref_gain_rho_db", diag, ok));
        else if (ch.contains("ref_gain_rho"))
            sc.channel.ref_gain_rho = get_number(ch, "channel", "ref_gain_rho", diag, ok);
        else
            diag.add("channel: missing ref_gain_rho or ref_gain_rho_db");

        if (ch.contains("rician_m") && ch.contains("rician_m_db"))
            diag.add("channel: give only one of rician_m / rician_m_db");
        else if (ch.contains("rician_m_db"))
            sc.channel.rician_m = db_to_linear(get_number(ch, "channel", "rician_m_db", diag, ok));
        else if (ch.contains("rician_m"))
            sc.channel.rician_m = get_number(ch, "channel", "rician_m", diag, ok);
        else
            diag.add("channel: missing rician_m or rician_m_db");

        sc.channel.noise_power = opt_number(ch, "channel", "noise_power", 1e-13, diag);
    }

    // scalars
    if (!root.contains("n_slots") || !root["n_slots"].is_number_integer())
        diag.add("\"n_slots\" must be an integer");
    else
        sc.n_slots = root["n_slots"].get<int>();
    bool dummy = true;
    if (root.contains("altitude_h")) sc.altitude_h = get_number(root, "top level", "altitude_h", diag, dummy);
    else diag.add("missing field \"altitude_h\"");
    if (root.contains("d_max")) sc.d_max = get_number(root, "top level", "d_max", diag, dummy);
    else diag.add("missing field \"d_max\"");
    if (root.contains("d_min")) sc.d_min = get_number(root, "top level", "d_min", diag, dummy);
    else diag.add("missing field \"d_min\"");

    if (root.contains("slot_bounds")) {
        if (!root["slot_bounds"].is_object()) {
            diag.add("\"slot_bounds\" must be an object with q_min/q_max");
        } else {
            check_keys(root["slot_bounds"], "slot_bounds", {"q_min", "q_max"}, diag);
            get_vec2(root["slot_bounds"], "slot_bounds", "q_min", sc.q_min, diag);
            get_vec2(root["slot_bounds"], "slot_bounds", "q_max", sc.q_max, diag);
        }
    }

    if (root.contains("failures")) {
        if (!root["failures"].is_array()) {
            diag.add("\"failures\" must be an array");
        } else {
            int idx = 0;
            for (const auto& j : root["failures"]) {
                std::string where = "failures[" + std::to_string(idx) + "]";
                if (!j.is_object()) {
                    diag.add(where + ": must be an object");
                    ++idx;
                    continue;
                }
                check_keys(j, where, {"uav_id", "slot"}, diag);
                FailureEvent f;
                if (j.contains("uav_id") && j["uav_id"].is_number_integer())
                    f.uav_id = j["uav_id"].get<int>();
                else
                    diag.add(where + ": field \"uav_id\" must be an integer");
                if (j.contains("slot") && j["slot"].is_number_integer())
                    f.slot = j["slot"].get<int>();
                else
                    diag.add(where + ": field \"slot\" must be an integer");
                sc.failures.push_back(f);
                ++idx;
            }
        }
    }

    if (!root.contains("seed") || !root["seed"].is_number_integer())
        diag.add("\"seed\" must be an integer");
    else
        sc.seed = root["seed"].get<std::uint64_t>();

    // settings block
    if (root.contains("settings")) {
        const json& st = root["settings"];
        if (!st.is_object()) {
            diag.add("\"settings\" must be an object");
        } else {
            check_keys(st, "settings",
                       {"max_iterations", "tolerance", "mu", "history_in_objective"}, diag);
            if (st.contains("max_iterations")) {
                if (st["max_iterations"].is_number_integer())
                    out.settings.max_iterations = st["max_iterations"].get<int>();
                else
                    diag.add("settings: \"max_iterations\" must be an integer");
            }
            out.settings.tolerance = opt_number(st, "settings", "tolerance",
                                                out.settings.tolerance, diag);
            double mu = opt_number(st, "settings", "mu", 0.0, diag);
            if (mu > 0.0) diag.add("settings: \"mu\" must be <= 0");
            else out.settings.risk = RiskConfig::from_mu(mu);
            if (st.contains("history_in_objective")) {
                if (st["history_in_objective"].is_boolean())
                    out.settings.history_in_objective = st["history_in_objective"].get<bool>();
                else
                    diag.add("settings: \"history_in_objective\" must be a boolean");
            }
        }
    }

    diag.raise_if_any();

    if (!have_users) {
        // paper-silent default: 9 users uniform in the area, from the seed
        SplitMix64 gen(mix_seed(sc.seed, 0x5173u));
        for (int k = 0; k < 9; ++k) {
            UserSite site;
            site.id = k;
            site.position = Vec2{sc.q_min.x + gen.next_double() * (sc.q_max.x - sc.q_min.x),
                                 sc.q_min.y + gen.next_double() * (sc.q_max.y - sc.q_min.y)};
            sc.users.push_back(site);
        }
    }

    auto violations = scenario_violations(sc);
    for (const auto& v : violations) diag.add(v);
    diag.raise_if_any();
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

ParsedConfig parse_config_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_json(root);
}

ParsedConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string scenario_to_text(const Scenario& sc) {
    json root;
    for (const auto& u : sc.uavs) {
        json j;
        j["id"] = u.id;
        j["initial_position"] = {u.initial_position.x, u.initial_position.y};
        j["bandwidth_budget"] = u.bandwidth_budget;
        j["tx_power"] = u.tx_power;
        root["uavs"].push_back(j);
    }
    for (const auto& k : sc.users) {
        json j;
        j["id"] = k.id;
        j["position"] = {k.position.x, k.position.y};
        root["users"].push_back(j);
    }
    root["channel"]["ref_gain_rho"] = sc.channel.ref_gain_rho;
    root["channel"]["rician_m"] = sc.channel.rician_m;
    root["channel"]["noise_power"] = sc.channel.noise_power;
    root["n_slots"] = sc.n_slots;
    root["slot_bounds"]["q_min"] = {sc.q_min.x, sc.q_min.y};
    root["slot_bounds"]["q_max"] = {sc.q_max.x, sc.q_max.y};
    root["altitude_h"] = sc.altitude_h;
    root["d_max"] = sc.d_max;
    root["d_min"] = sc.d_min;
    for (const auto& f : sc.failures) {
        json j;
        j["uav_id"] = f.uav_id;
        j["slot"] = f.slot;
        root["failures"].push_back(j);
    }
    if (sc.failures.empty()) root["failures"] = json::array();
    root["seed"] = sc.seed;
    return root.dump(2) + "\n";
}

void emit_results(const std::vector<EpisodeMetrics>& metrics,
                  const std::filesystem::path& out_dir) {
    if (metrics.empty()) throw IoError("emit_results: no metrics to write");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string());

    auto open = [&](const char* name) {
        std::ofstream f(out_dir / name, std::ios::binary);
        if (!f) throw IoError("cannot write " + (out_dir / name).string());
        return f;
    };

    {
        std::ofstream f = open("per_slot.csv");
        f << "scheme,mu,seed,slot,sum_rate,user_id,user_rate\n";
        for (const auto& m : metrics)
            for (std::size_t off = 0; off < m.n_slots; ++off)
                for (std::size_t k = 0; k < m.n_users; ++k)
                    f << m.scheme << ',' << fmt(m.mu) << ',' << m.seed << ',' << (off + 1) << ','
                      << fmt(m.slot_sums[off]) << ',' << k << ','
                      << fmt(m.user_rates[k * m.n_slots + off]) << '\n';
        if (!f) throw IoError("failed writing per_slot.csv under " + out_dir.string());
    }
    {
        std::ofstream f = open("episodes.csv");
        f << "scheme,mu,seed,avg_rate_p1,avg_rate_p2,variance,jain,iterations\n";
        for (const auto& m : metrics)
            f << m.scheme << ',' << fmt(m.mu) << ',' << m.seed << ',' << fmt(m.avg_rate_p1) << ','
              << fmt(m.avg_rate_p2) << ',' << fmt(m.variance) << ',' << fmt(m.jain) << ','
              << m.iterations << '\n';
        if (!f) throw IoError("failed writing episodes.csv under " + out_dir.string());
    }
    {
        std::ofstream f = open("traces.csv");
        f << "scheme,mu,seed,plan,iteration,objective,block,status\n";
        for (const auto& m : metrics) {
            int plan_idx = 0;
            for (const auto& t : m.traces) {
                for (const auto& b : t.blocks)
                    f << m.scheme << ',' << fmt(m.mu) << ',' << m.seed << ',' << plan_idx << ','
                      << b.iteration << ',' << fmt(b.objective_after) << ',' << b.block << ','
                      << to_string(b.status) << '\n';
                ++plan_idx;
            }
        }
        if (!f) throw IoError("failed writing traces.csv under " + out_dir.string());
    }
    {
        // per-(scheme, mu) means and the induced orderings
        struct Agg {
            double p1 = 0, p2 = 0, var = 0, jain = 0;
            int n = 0;
        };
        std::map<std::string, Agg> agg;
        for (const auto& m : metrics) {
            std::string key = m.scheme;
            if (m.scheme == "pro_alg") key += "@mu=" + fmt(m.mu);
            Agg& a = agg[key];
            a.p1 += m.avg_rate_p1;
            a.p2 += m.avg_rate_p2;
            a.var += m.variance;
            a.jain += m.jain;
            ++a.n;
        }
        json summary;
        std::vector<std::pair<std::string, Agg>> rows(agg.begin(), agg.end());
        for (auto& [key, a] : rows) {
            summary["schemes"][key]["episodes"] = a.n;
            summary["schemes"][key]["mean_avg_rate_p1"] = a.p1 / a.n;
            summary["schemes"][key]["mean_avg_rate_p2"] = a.p2 / a.n;
            summary["schemes"][key]["mean_variance"] = a.var / a.n;
            summary["schemes"][key]["mean_jain"] = a.jain / a.n;
        }
        auto order_by = [&rows](auto proj, bool desc) {
            auto sorted = rows;
            std::stable_sort(sorted.begin(), sorted.end(), [&](const auto& x, const auto& y) {
                double a = proj(x.second) / x.second.n, b = proj(y.second) / y.second.n;
                return desc ? a > b : a < b;
            });
            json names = json::array();
            for (const auto& [key, a] : sorted) names.push_back(key);
            return names;
        };
        summary["orderings"]["period1_rate_desc"] =
            order_by([](const Agg& a) { return a.p1; }, true);
        summary["orderings"]["variance_asc"] = order_by([](const Agg& a) { return a.var; }, false);
        summary["orderings"]["jain_desc"] = order_by([](const Agg& a) { return a.jain; }, true);

        std::ofstream f = open("summary.json");
        f << summary.dump(2) << "\n";
        if (!f) throw IoError("failed writing summary.json under " + out_dir.string());
    }
}

}  // namespace uavnet
