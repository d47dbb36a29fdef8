#pragma once

// Configuration, dispatch and on-disk artifacts for the command-line
// runner. A run is a list of work units (experiment id, trial index); each
// unit yields one JSON record. Records go to trials.jsonl in unit order,
// the manifest tracks how many are done, and the summary is rebuilt from
// the records alone, so a resumed run ends with the same bytes as an
// uninterrupted one.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "checks.hpp"
#include "combinatorics.hpp"
#include "experiments.hpp"
#include "grid_io.hpp"

namespace bootperc::runner {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* code_version = "bootperc 0.1.0";

enum ExitCode : int { exit_ok = 0, exit_failed = 1, exit_invalid = 2, exit_stopped = 3 };

// Bad config, or a resume that does not match what is on disk.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Command { simulate, closure, scan, estimate_k, slab, waves, verify };

inline const char* to_string(Command c) {
    switch (c) {
        case Command::simulate: return "simulate";
        case Command::closure: return "closure";
        case Command::scan: return "scan";
        case Command::estimate_k: return "estimate-k";
        case Command::slab: return "slab";
        case Command::waves: return "waves";
        case Command::verify: return "verify";
    }
    return "?";
}

inline Command parse_command(std::string_view s) {
    for (auto c : {Command::simulate, Command::closure, Command::scan, Command::estimate_k, Command::slab,
                   Command::waves, Command::verify})
        if (s == to_string(c)) return c;
    throw ConfigError("unknown command '" + std::string(s) + "'");
}

struct RunConfig {
    Command command = Command::simulate;
    std::vector<int> ns;
    std::vector<double> ps;
    std::vector<double> Ms;
    std::int64_t trials = 0;  // 0: the command's default
    std::uint64_t master_seed = 1;
    ScaleParams scale;
    double tolerance = 0.05;  // estimate-k
    int K_max = 4096;         // estimate-k
    std::int64_t retry_cap = 100000;  // slab
    int max_width = 60;       // waves
    int max_height = 200;     // waves
    std::string fixtures = "fixtures/corpus.json";  // verify
    std::string out = "out";
    bool resume = false;
    int threads = 0;  // 0: BOOTPERC_THREADS, then hardware

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "command", "n", "ns", "p", "ps", "M", "Ms", "trials", "master_seed", "B", "A_const", "sigma", "c_slow", "p0",
        "relaxed", "tolerance", "K_max", "retry_cap", "max_width", "max_height", "fixtures", "out", "resume",
        "threads"};
    return keys;
}

inline std::int64_t get_int(const json& v, const std::string& key) {
    if (!v.is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
    return v.get<std::int64_t>();
}

inline double get_number(const json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
    return v.get<double>();
}

template <class T, class Get>
std::vector<T> get_list(const json& j, const std::string& one, const std::string& many, Get get) {
    if (j.contains(one) && j.contains(many)) throw ConfigError("give either '" + one + "' or '" + many + "', not both");
    std::vector<T> out;
    if (j.contains(one)) out.push_back(T(get(j.at(one), one)));
    if (j.contains(many)) {
        if (!j.at(many).is_array()) throw ConfigError("'" + many + "' must be an array");
        for (const auto& v : j.at(many)) out.push_back(T(get(v, many)));
    }
    return out;
}

template <class T>
void require_distinct(const std::vector<T>& v, const std::string& key) {
    std::vector<T> s(v);
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw ConfigError("'" + key + "' has repeated values");
}

}  // namespace detail

// Fill command defaults and check ranges. Idempotent.
inline RunConfig normalize(RunConfig c) {
    const auto set_default = [](auto& v, auto d) {
        if (v.empty()) v = d;
    };
    std::int64_t default_trials = 100;
    switch (c.command) {
        case Command::simulate:
            set_default(c.ns, std::vector<int>{256});
            set_default(c.ps, std::vector<double>{0.3});
            break;
        case Command::scan:
            set_default(c.ns, std::vector<int>{256, 512, 1024});
            set_default(c.ps, std::vector<double>{0.25, 0.3, 0.35});
            default_trials = 500;
            break;
        case Command::closure:
            set_default(c.ns, std::vector<int>{16, 32, 64});
            set_default(c.ps, std::vector<double>{0.05, 0.1, 0.2, 0.4});
            default_trials = 250;
            break;
        case Command::estimate_k:
            set_default(c.ps, std::vector<double>{0.1, 0.12, 0.15});
            default_trials = 2000;
            break;
        case Command::slab:
            set_default(c.ps, std::vector<double>{0.03});
            set_default(c.Ms, std::vector<double>{30, 40, 50, 60});
            default_trials = 50;
            break;
        case Command::waves:
            set_default(c.ps, std::vector<double>{0.05, 0.1, 0.2});
            default_trials = 200;
            break;
        case Command::verify:
            set_default(c.ns, std::vector<int>{24});
            set_default(c.ps, std::vector<double>{0.05, 0.1, 0.2, 0.4});
            default_trials = 25;
            break;
    }
    if (c.trials == 0) c.trials = default_trials;

    const bool uses_n = c.command != Command::estimate_k && c.command != Command::slab && c.command != Command::waves;
    if (!uses_n && !c.ns.empty()) throw ConfigError(std::string("'n' does not apply to ") + to_string(c.command));
    if (c.command != Command::slab && !c.Ms.empty())
        throw ConfigError(std::string("'M' does not apply to ") + to_string(c.command));
    detail::require_distinct(c.ns, "n");
    detail::require_distinct(c.ps, "p");
    detail::require_distinct(c.Ms, "M");
    for (int n : c.ns)
        if (n < 1 || n > 8192) throw ConfigError("n must lie in [1, 8192]");
    for (double p : c.ps) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p must lie in [0, 1]");
        const bool open = c.command == Command::estimate_k || c.command == Command::slab || c.command == Command::waves;
        if (open && !(p > 0.0 && p < 1.0)) throw ConfigError(std::string("p must lie in (0, 1) for ") + to_string(c.command));
        if (c.command == Command::estimate_k && p > c.scale.p0) throw ConfigError("estimate-k needs p <= p0");
    }
    for (double M : c.Ms) {
        if (!(M >= 1.0)) throw ConfigError("M must be >= 1");
        for (double p : c.ps)
            if (M / p > 1e5) throw ConfigError("slab long side M/p above 1e5");
    }
    if (c.trials < 1 || c.trials > 10'000'000) throw ConfigError("trials must lie in [1, 1e7]");
    if (!(c.tolerance > 0.0 && c.tolerance < 0.5)) throw ConfigError("tolerance must lie in (0, 1/2)");
    if (c.K_max < 2 || c.K_max > 8192) throw ConfigError("K_max must lie in [2, 8192]");
    if (c.retry_cap < c.trials) throw ConfigError("retry_cap must be >= trials");
    if (c.max_width < 5 || c.max_height < 5 || c.max_width > 1000 || c.max_height > 1000)
        throw ConfigError("max_width and max_height must lie in [5, 1000]");
    if (c.threads < 0) throw ConfigError("threads must be >= 0");
    if (c.out.empty()) throw ConfigError("out must be a directory path");
    try {
        c.scale.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

inline RunConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!detail::known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
    if (!j.contains("command") || !j.at("command").is_string()) throw ConfigError("'command' (string) is required");
    RunConfig c;
    c.command = parse_command(j.at("command").get<std::string>());
    c.ns = detail::get_list<int>(j, "n", "ns", [](const json& v, const std::string& k) {
        const auto n = detail::get_int(v, k);
        if (n < 1 || n > 8192) throw ConfigError("n must lie in [1, 8192]");
        return n;
    });
    c.ps = detail::get_list<double>(j, "p", "ps", detail::get_number);
    c.Ms = detail::get_list<double>(j, "M", "Ms", detail::get_number);
    const auto opt = [&](const char* key, auto apply) {
        if (j.contains(key)) apply(j.at(key), std::string(key));
    };
    opt("trials", [&](const json& v, const std::string& k) { c.trials = detail::get_int(v, k); });
    opt("master_seed", [&](const json& v, const std::string& k) {
        if (!v.is_number_unsigned()) throw ConfigError("'" + k + "' must be a non-negative integer");
        c.master_seed = v.get<std::uint64_t>();
    });
    opt("B", [&](const json& v, const std::string& k) { c.scale.B = detail::get_number(v, k); });
    opt("A_const", [&](const json& v, const std::string& k) { c.scale.A_const = detail::get_number(v, k); });
    opt("sigma", [&](const json& v, const std::string& k) { c.scale.sigma = int(detail::get_int(v, k)); });
    opt("c_slow", [&](const json& v, const std::string& k) { c.scale.c_slow = detail::get_number(v, k); });
    opt("p0", [&](const json& v, const std::string& k) { c.scale.p0 = detail::get_number(v, k); });
    opt("relaxed", [&](const json& v, const std::string& k) {
        if (!v.is_boolean()) throw ConfigError("'" + k + "' must be a boolean");
        c.scale.relaxed = v.get<bool>();
    });
    opt("tolerance", [&](const json& v, const std::string& k) { c.tolerance = detail::get_number(v, k); });
    opt("K_max", [&](const json& v, const std::string& k) { c.K_max = int(detail::get_int(v, k)); });
    opt("retry_cap", [&](const json& v, const std::string& k) { c.retry_cap = detail::get_int(v, k); });
    opt("max_width", [&](const json& v, const std::string& k) { c.max_width = int(detail::get_int(v, k)); });
    opt("max_height", [&](const json& v, const std::string& k) { c.max_height = int(detail::get_int(v, k)); });
    opt("fixtures", [&](const json& v, const std::string& k) {
        if (!v.is_string()) throw ConfigError("'" + k + "' must be a string");
        c.fixtures = v.get<std::string>();
    });
    opt("out", [&](const json& v, const std::string& k) {
        if (!v.is_string()) throw ConfigError("'" + k + "' must be a string");
        c.out = v.get<std::string>();
    });
    opt("resume", [&](const json& v, const std::string& k) {
        if (!v.is_boolean()) throw ConfigError("'" + k + "' must be a boolean");
        c.resume = v.get<bool>();
    });
    opt("threads", [&](const json& v, const std::string& k) { c.threads = int(detail::get_int(v, k)); });
    return c;
}

// Everything that determines the output bytes.
inline json experiment_json(const RunConfig& c) {
    return {{"command", to_string(c.command)},
            {"ns", c.ns},
            {"ps", c.ps},
            {"Ms", c.Ms},
            {"trials", c.trials},
            {"master_seed", c.master_seed},
            {"B", c.scale.B},
            {"A_const", c.scale.A_const},
            {"sigma", c.scale.sigma},
            {"c_slow", c.scale.c_slow},
            {"p0", c.scale.p0},
            {"relaxed", c.scale.relaxed},
            {"tolerance", c.tolerance},
            {"K_max", c.K_max},
            {"retry_cap", c.retry_cap},
            {"max_width", c.max_width},
            {"max_height", c.max_height},
            {"fixtures", c.fixtures}};
}

inline json to_json(const RunConfig& c) {
    json j = experiment_json(c);
    j["out"] = c.out;
    j["resume"] = c.resume;
    j["threads"] = c.threads;
    return j;
}

inline RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

inline int effective_threads(const RunConfig& c) {
    if (c.threads > 0) return c.threads;
    if (const char* env = std::getenv("BOOTPERC_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 0) throw ConfigError("BOOTPERC_THREADS must be a non-negative integer");
        if (v > 0) return int(v);
    }
    return resolve_threads(0);
}

// ----------------------------------------------------------------- units

struct Unit {
    std::string experiment;
    std::uint64_t trial = 0;
    int n = 0;
    double p = 0.0;
    double M = 0.0;
};

struct Context {
    RunConfig cfg;
    json fixtures;  // verify only
};

inline std::string grid_id(const char* kind, int n, double p) {
    return std::string(kind) + "/n=" + std::to_string(n) + "/p=" + id_number(p);
}

inline std::vector<Unit> make_units(const Context& ctx) {
    const auto& c = ctx.cfg;
    std::vector<Unit> us;
    const auto trials = std::uint64_t(c.trials);
    switch (c.command) {
        case Command::simulate:
        case Command::scan:
            for (double p : c.ps)
                for (int n : c.ns)
                    for (std::uint64_t i = 0; i < trials; ++i) us.push_back({time_experiment_id(n, p), i, n, p, 0});
            break;
        case Command::closure:
            for (double p : c.ps)
                for (int n : c.ns)
                    for (std::uint64_t i = 0; i < trials; ++i) us.push_back({grid_id("closure", n, p), i, n, p, 0});
            break;
        case Command::estimate_k:
            for (double p : c.ps) us.push_back({"critical_k/p=" + id_number(p), 0, 0, p, 0});
            break;
        case Command::slab:
            for (double p : c.ps)
                for (double M : c.Ms) us.push_back({slab_experiment_id(p, M), 0, 0, p, M});
            break;
        case Command::waves:
            for (double p : c.ps)
                for (std::uint64_t i = 0; i < trials; ++i) us.push_back({"waves/p=" + id_number(p), i, 0, p, 0});
            break;
        case Command::verify:
            for (std::uint64_t i = 0; i < ctx.fixtures.at("entries").size(); ++i)
                us.push_back({"verify/fixture", i, 0, 0, 0});
            for (double p : c.ps)
                for (int n : c.ns)
                    for (std::uint64_t i = 0; i < trials; ++i) us.push_back({grid_id("verify", n, p), i, n, p, 0});
            us.push_back({"verify/coffeetime", 0, 0, 0, 0});
            us.push_back({"verify/calc", 0, 0, 0, 0});
            break;
    }
    return us;
}

// Units that run their own parallel loop get all threads; the rest are
// spread over the pool one per worker.
inline bool inner_parallel(Command c) { return c == Command::estimate_k || c == Command::slab; }

namespace detail {

inline json proportion_json(const Proportion& p) {
    return {{"successes", p.successes}, {"trials", p.trials}, {"point", p.point}, {"lo", p.lo}, {"hi", p.hi}};
}

inline json droplet_json(const Droplet& d) { return json::array({d.a, d.b, d.c, d.d}); }

inline std::string join_lines(const json& rows) {
    std::string s;
    for (const auto& r : rows) {
        s += r.get<std::string>();
        s += '\n';
    }
    return s;
}

inline json fixture_record(const json& e) {
    json r;
    r["name"] = e.at("name");
    const auto a = parse_text(join_lines(e.at("grid")));
    const auto run = evolve(a, {std::nullopt, true});
    r["closure_equal"] = render_text(run.closure) + "\n" == join_lines(e.at("closure"));
    r["steps_equal"] = run.steps == e.at("steps").get<std::uint32_t>();
    const auto T = run.percolation_time();
    r["T_equal"] = e.at("T").is_null() ? !T.has_value() : (T && *T == e.at("T").get<std::uint32_t>());
    bool times = true;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
            const auto want = e.at("times")[std::size_t(y)][std::size_t(x)].get<long long>();
            const auto got = run.field->at(x, y);
            times = times && (want < 0 ? got == InfectionField::NEVER : got == std::uint32_t(want));
        }
    r["times_equal"] = times;
    const auto trace = rectangles_process(a);
    auto finals = trace.final_droplets();
    std::vector<Droplet> want;
    for (const auto& b : e.at("finals")) want.push_back({b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()});
    std::sort(finals.begin(), finals.end());
    std::sort(want.begin(), want.end());
    r["finals_equal"] = finals == want;
    r["phi_ok"] = std::all_of(trace.nodes.begin(), trace.nodes.end(), [&](const TraceNode& n) {
        return 2 * count_in(a, n.droplet) >= std::size_t(n.droplet.phi());
    });
    r["text_roundtrip"] = parse_text(render_text(a)) == a;
    r["binary_roundtrip"] = from_bpgr(to_bpgr(a)) == a;
    bool ok = true;
    for (const char* k : {"closure_equal", "steps_equal", "T_equal", "times_equal", "finals_equal", "phi_ok",
                          "text_roundtrip", "binary_roundtrip"})
        ok = ok && r[k].get<bool>();
    r["ok"] = ok;
    return r;
}

inline json wave_case_json(const WaveCase& w) {
    json r{{"width", w.droplet.width()},
           {"height", w.droplet.height()},
           {"subcritical", w.subcritical},
           {"eligible", w.eligible},
           {"site", w.site ? json::array({w.site->x, w.site->y}) : json(nullptr)},
           {"strict", w.strict},
           {"wave_height", w.wave_height},
           {"site_height", w.site_height},
           {"wave_time", w.wave_time},
           {"flood_time", w.flood_time},
           {"wave_length", w.wave_length},
           {"failure", w.failure ? json(*w.failure) : json(nullptr)}};
    json rs = json::array();
    bool ok = !w.failure;
    for (const auto& c : w.restrictions) {
        rs.push_back({{"sigma", c.sigma},
                      {"gamma", c.gamma},
                      {"cells", c.cells},
                      {"height_ok", c.height_ok},
                      {"time_ok", c.time_ok},
                      {"audit", c.audit ? json(*c.audit) : json(nullptr)}});
        ok = ok && c.ok();
    }
    r["restrictions"] = rs;
    r["ok"] = ok;
    return r;
}

inline json coffeetime_record() {
    std::int64_t checks = 0, violations = 0;
    double worst = 0.0;
    std::string worst_at;
    for (const auto& g : coffeetime_corpus()) {
        for (int v = 0; v < g.order(); ++v)
            for (int k = 1; k <= std::min(6, g.order()); ++k) {
                const auto r = coffeetime_check(g, v, k);
                ++checks;
                violations += !r.pass;
                const double ratio = double(r.count) / r.bound;
                if (ratio > worst) {
                    worst = ratio;
                    worst_at = g.name + " v=" + std::to_string(v) + " k=" + std::to_string(k);
                }
            }
    }
    return {{"graphs", coffeetime_corpus().size()},
            {"checks", checks},
            {"violations", violations},
            {"max_count_over_bound", worst},
            {"max_at", worst_at},
            {"ok", violations == 0}};
}

inline json calc_record() {
    json variants = json::array();
    bool ok = true;
    for (double r : {1.0, 0.5}) {
        CalcParams cp;
        cp.rhs_fraction = r;
        const auto a = appendix_calc_check(cp, 40);
        const auto b = appendix_calc_check(cp, 60);
        const bool agree = (a.argmin.f >= 0) == (b.argmin.f >= 0);
        variants.push_back({{"rhs_fraction", r},
                            {"min_f_coarse", a.argmin.f},
                            {"min_f_fine", b.argmin.f},
                            {"argmin_fine", {b.argmin.a, b.argmin.b, b.argmin.c}},
                            {"evaluated", a.evaluated + b.evaluated},
                            {"signs_agree", agree},
                            {"pass", a.pass && b.pass && agree}});
        ok = ok && a.pass && b.pass && agree;
    }
    return {{"variants", variants}, {"ok", ok}};
}

}  // namespace detail

inline json run_unit(const Context& ctx, const Unit& u, int threads) {
    const auto& c = ctx.cfg;
    json r;
    switch (c.command) {
        case Command::simulate:
        case Command::scan: {
            const auto t = time_trial(u.n, u.p, c.master_seed, u.trial);
            r = {{"seed", t.seed},
                 {"n", t.n},
                 {"p", t.p},
                 {"T", t.T ? json(*t.T) : json(nullptr)},
                 {"longest_double_line", t.longest_double_line},
                 {"blocking_bound", t.blocking_bound},
                 {"blocking_ok", t.blocking_ok},
                 {"ok", t.blocking_ok}};
            break;
        }
        case Command::closure: {
            const auto seed = derive_seed(c.master_seed, u.experiment, u.trial);
            const auto a = sample_below(GridConfig::square(u.n), seed, u.trial, u.p);
            const auto k = closure_check(a);
            r = {{"seed", seed},        {"n", u.n},
                 {"p", u.p},            {"occupied", k.occupied},
                 {"closure_size", k.closure_size}, {"finals", k.finals},
                 {"nodes", k.nodes},    {"percolated", k.percolated},
                 {"equal", k.equal},    {"phi_ok", k.phi_ok},
                 {"ok", k.equal && k.phi_ok}};
            break;
        }
        case Command::estimate_k: {
            r = {{"p", u.p}, {"trials", c.trials}, {"tolerance", c.tolerance}, {"K_max", c.K_max}};
            try {
                const auto k = estimate_critical_K(u.p, c.trials, c.tolerance, c.master_seed, c.K_max, threads);
                json path = json::array();
                for (const auto& pt : k.path) path.push_back({{"K", pt.K}, {"gamma", detail::proportion_json(pt.gamma)}});
                r["bracket_found"] = true;
                r["K_min"] = k.K_min;
                r["K_hat"] = k.K_hat;
                r["mu_hat"] = k.mu_hat;
                r["at_K"] = detail::proportion_json(k.at_K);
                r["tolerance_met"] = k.tolerance_met;
                r["monotone"] = k.monotone;
                r["path"] = path;
            } catch (const BracketNotFound& e) {
                r["bracket_found"] = false;
                r["bracket"] = {e.lo, e.hi};
            }
            r["ok"] = true;
            break;
        }
        case Command::slab: {
            const auto s = slab_experiment(u.p, u.M, c.scale, c.trials, c.master_seed, c.retry_cap, threads);
            r = {{"p", u.p},
                 {"M", u.M},
                 {"long_side", s.long_side},
                 {"short_side", s.short_side},
                 {"attempts", s.attempts},
                 {"subcritical", s.subcritical},
                 {"gamma_events", s.gamma_events},
                 {"budget_exhausted", s.budget_exhausted},
                 {"threshold", s.threshold},
                 {"fast_given_subcritical",
                  s.fast_given_subcritical ? detail::proportion_json(*s.fast_given_subcritical) : json(nullptr)},
                 {"mean_flood_over_length", s.mean_flood_over_length},
                 {"flood_totals", s.flood_totals},
                 {"ok", true}};
            break;
        }
        case Command::waves: {
            const auto seed = derive_seed(c.master_seed, u.experiment, u.trial);
            r = detail::wave_case_json(wave_case(seed, u.p, c.max_width, c.max_height, c.scale.sigma));
            r["seed"] = seed;
            r["p"] = u.p;
            break;
        }
        case Command::verify: {
            if (u.experiment == "verify/fixture") {
                r = detail::fixture_record(ctx.fixtures.at("entries").at(u.trial));
            } else if (u.experiment == "verify/coffeetime") {
                r = detail::coffeetime_record();
            } else if (u.experiment == "verify/calc") {
                r = detail::calc_record();
            } else {
                const auto seed = derive_seed(c.master_seed, u.experiment, u.trial);
                const auto a = sample_below(GridConfig::square(u.n), seed, u.trial, u.p);
                const auto k = closure_check(a);
                std::mt19937_64 rng(seed);
                const auto d = random_droplet_in(a.config(), rng);
                const auto flood_bad = flood_containment_violation(d, a);
                const int side = std::max(u.n, 5);
                const auto wc = u.p > 0.0 && u.p < 1.0 ? std::optional(wave_case(seed, u.p, side, side, c.scale.sigma))
                                                       : std::nullopt;
                r = {{"seed", seed},
                     {"n", u.n},
                     {"p", u.p},
                     {"closure_equal", k.equal},
                     {"phi_ok", k.phi_ok},
                     {"flood_droplet", detail::droplet_json(d)},
                     {"flood_violation", flood_bad ? json(*flood_bad) : json(nullptr)},
                     {"wave", wc ? detail::wave_case_json(*wc) : json(nullptr)}};
                r["ok"] = k.equal && k.phi_ok && !flood_bad && (!wc || r["wave"]["ok"].get<bool>());
            }
            break;
        }
    }
    // Identity fields last so they are never overwritten by the payload.
    r["experiment"] = u.experiment;
    r["trial"] = u.trial;
    return r;
}

// --------------------------------------------------------------- summary

struct Summary {
    json doc;
    json rows = json::array();  // the CSV table
    std::int64_t hard_failures = 0;
    bool any_fail = false;
};

namespace detail {

inline void add_verdict(Summary& s, const std::string& name, Verdict v, const std::string& detail) {
    s.doc["verdicts"].push_back({{"name", name}, {"verdict", to_string(v)}, {"detail", detail}});
    s.any_fail = s.any_fail || v == Verdict::fail;
}

inline Verdict pass_if(bool b) { return b ? Verdict::pass : Verdict::fail; }

// Groups in first-appearance order.
inline std::vector<std::pair<std::string, std::vector<const json*>>> group(const std::vector<json>& records) {
    std::vector<std::pair<std::string, std::vector<const json*>>> out;
    std::map<std::string, std::size_t> at;
    for (const auto& r : records) {
        const auto id = r.at("experiment").get<std::string>();
        auto it = at.find(id);
        if (it == at.end()) {
            it = at.emplace(id, out.size()).first;
            out.push_back({id, {}});
        }
        out[it->second].second.push_back(&r);
    }
    return out;
}

inline json time_row_json(const TimeRow& t) {
    return {{"n", t.n},
            {"p", t.p},
            {"trials", t.trials},
            {"percolated", t.percolated},
            {"blocking_violations", t.blocking_violations},
            {"predicted", t.predicted},
            {"median_T", t.T.median},
            {"T_lo", t.T.lo},
            {"T_hi", t.T.hi},
            {"ratio", t.ratio},
            {"ratio_lo", t.ratio_lo},
            {"ratio_hi", t.ratio_hi},
            {"in_band", t.in_band}};
}

inline void summarize_time_runs(Summary& s, const std::vector<json>& records, bool scan) {
    std::int64_t violations = 0;
    std::map<double, std::vector<TimeRow>> by_p;
    std::vector<double> p_order;
    for (const auto& [id, rs] : group(records)) {
        std::vector<TimeTrial> ts;
        for (const json* r : rs) {
            TimeTrial t;
            t.trial_index = r->at("trial").get<std::uint64_t>();
            t.seed = r->at("seed").get<std::uint64_t>();
            t.n = r->at("n").get<int>();
            t.p = r->at("p").get<double>();
            if (!r->at("T").is_null()) t.T = r->at("T").get<std::uint32_t>();
            t.longest_double_line = r->at("longest_double_line").get<int>();
            t.blocking_bound = r->at("blocking_bound").get<std::uint32_t>();
            t.blocking_ok = r->at("blocking_ok").get<bool>();
            ts.push_back(t);
        }
        const auto row = summarize_time(ts.front().n, ts.front().p, ts);
        violations += row.blocking_violations;
        if (!by_p.count(row.p)) p_order.push_back(row.p);
        by_p[row.p].push_back(row);
        s.rows.push_back(time_row_json(row));
        if (scan) {
            std::ostringstream d;
            d << "median T / prediction = " << row.ratio << " (CI " << row.ratio_lo << ", " << row.ratio_hi << ")";
            add_verdict(s, "band n=" + std::to_string(row.n) + " p=" + id_number(row.p), pass_if(row.in_band), d.str());
        }
    }
    add_verdict(s, "blocking", pass_if(violations == 0), std::to_string(violations) + " trials with T below the bound");
    if (!scan) return;
    for (double p : p_order) {
        const auto& rows = by_p[p];
        if (rows.size() < 2) continue;
        const auto by_n = [](const TimeRow& a, const TimeRow& b) { return a.n < b.n; };
        const auto t = trend_check(*std::min_element(rows.begin(), rows.end(), by_n),
                                   *std::max_element(rows.begin(), rows.end(), by_n));
        std::ostringstream d;
        d << "|ratio-1| " << t.dev_small << " at n=" << t.n_small << ", " << t.dev_large << " at n=" << t.n_large;
        add_verdict(s, "trend p=" + id_number(p), pass_if(t.pass), d.str());
    }
}

inline void summarize_closure(Summary& s, const std::vector<json>& records) {
    std::int64_t grids = 0, equal = 0, phi = 0;
    for (const auto& [id, rs] : group(records)) {
        std::int64_t e = 0, f = 0, perc = 0;
        for (const json* r : rs) {
            e += r->at("equal").get<bool>();
            f += r->at("phi_ok").get<bool>();
            perc += r->at("percolated").get<bool>();
        }
        s.rows.push_back({{"n", rs.front()->at("n")},
                          {"p", rs.front()->at("p")},
                          {"grids", rs.size()},
                          {"equal", e},
                          {"phi_ok", f},
                          {"percolated", perc}});
        grids += std::int64_t(rs.size());
        equal += e;
        phi += f;
    }
    add_verdict(s, "closure equivalence", pass_if(equal == grids),
                std::to_string(equal) + "/" + std::to_string(grids) + " grids");
    add_verdict(s, "phi/2 bound", pass_if(phi == grids), std::to_string(phi) + "/" + std::to_string(grids) + " grids");
}

inline void summarize_k(Summary& s, const std::vector<json>& records) {
    for (const auto& r : records) {
        const auto p = r.at("p").get<double>();
        const std::string tag = "p=" + id_number(p);
        if (!r.at("bracket_found").get<bool>()) {
            s.rows.push_back({{"p", p}, {"K_hat", nullptr}, {"mu_hat", nullptr}, {"monotone", nullptr}});
            add_verdict(s, "mu_hat in (0, lambda) " + tag, Verdict::fail, "no K with P(Gamma) >= 1/2 below K_max");
            continue;
        }
        const auto mu = r.at("mu_hat").get<double>();
        s.rows.push_back({{"p", p},
                          {"K_min", r.at("K_min")},
                          {"K_hat", r.at("K_hat")},
                          {"mu_hat", mu},
                          {"gamma_at_K", r.at("at_K").at("point")},
                          {"tolerance_met", r.at("tolerance_met")},
                          {"monotone", r.at("monotone")}});
        std::ostringstream d;
        d << "mu_hat = " << mu << ", lambda = " << lambda_const << ", floor p ln(gamma/4) = "
          << p * std::log(std::pow(p, -3.0) / 4.0);
        add_verdict(s, "mu_hat in (0, lambda) " + tag, pass_if(mu > 0.0 && mu < lambda_const), d.str());
        add_verdict(s, "monotone path " + tag, pass_if(r.at("monotone").get<bool>()), "");
    }
}

inline void summarize_slab(Summary& s, const std::vector<json>& records) {
    std::map<double, std::pair<std::vector<double>, std::vector<double>>> by_p;
    std::vector<double> p_order;
    for (const auto& r : records) {
        const auto p = r.at("p").get<double>(), M = r.at("M").get<double>();
        const auto& fast = r.at("fast_given_subcritical");
        s.rows.push_back({{"p", p},
                          {"M", M},
                          {"long_side", r.at("long_side")},
                          {"short_side", r.at("short_side")},
                          {"attempts", r.at("attempts")},
                          {"subcritical", r.at("subcritical")},
                          {"budget_exhausted", r.at("budget_exhausted")},
                          {"threshold", r.at("threshold")},
                          {"fast", fast.is_null() ? json(nullptr) : fast.at("point")},
                          {"fast_lo", fast.is_null() ? json(nullptr) : fast.at("lo")},
                          {"fast_hi", fast.is_null() ? json(nullptr) : fast.at("hi")},
                          {"mean_flood_over_length", r.at("mean_flood_over_length")}});
        if (!by_p.count(p)) p_order.push_back(p);
        for (const auto& t : r.at("flood_totals")) {
            by_p[p].first.push_back(M);
            by_p[p].second.push_back(t.get<double>());
        }
    }
    json trends = json::array();
    for (double p : p_order) {
        const auto& [ms, ts] = by_p[p];
        if (ms.size() >= 2) trends.push_back({{"p", p}, {"spearman_M_vs_flood_total", spearman(ms, ts)}});
    }
    s.doc["trends"] = trends;
}

inline void summarize_waves(Summary& s, const std::vector<json>& records, bool in_verify) {
    std::map<double, std::array<std::int64_t, 6>> by_p;  // cases, eligible, strict, fallback, failures, restriction failures
    std::vector<double> p_order;
    std::int64_t restriction_checks = 0;
    for (const auto& r : records) {
        const json& w = in_verify ? r.at("wave") : r;
        if (w.is_null()) continue;
        const auto p = r.at("p").get<double>();
        if (!by_p.count(p)) {
            p_order.push_back(p);
            by_p[p] = {};
        }
        auto& c = by_p[p];
        ++c[0];
        const bool counted = !w.at("site").is_null() && w.at("subcritical").get<bool>();
        c[1] += counted;
        if (counted && w.at("failure").is_null()) {
            c[2] += w.at("strict").get<bool>();
            c[3] += !w.at("strict").get<bool>();
        }
        c[4] += !w.at("failure").is_null();
        for (const auto& x : w.at("restrictions")) {
            ++restriction_checks;
            c[5] += !(x.at("height_ok").get<bool>() && x.at("time_ok").get<bool>() && x.at("audit").is_null());
        }
    }
    std::array<std::int64_t, 6> total{};
    for (double p : p_order) {
        const auto& c = by_p[p];
        for (std::size_t i = 0; i < 6; ++i) total[i] += c[i];
        if (!in_verify)
            s.rows.push_back({{"p", p},
                              {"cases", c[0]},
                              {"eligible_subcritical", c[1]},
                              {"strict", c[2]},
                              {"fallback", c[3]},
                              {"failures", c[4]},
                              {"restriction_failures", c[5]}});
    }
    s.doc["waves"] = {{"cases", total[0]},
                      {"eligible_subcritical", total[1]},
                      {"strict", total[2]},
                      {"fallback", total[3]},
                      {"failures", total[4]},
                      {"restriction_checks", restriction_checks},
                      {"restriction_failures", total[5]}};
    add_verdict(s, "wave extraction hard assertions", pass_if(total[4] == 0), std::to_string(total[4]) + " failures");
    add_verdict(s, "restriction invariants", pass_if(total[5] == 0),
                std::to_string(total[5]) + "/" + std::to_string(restriction_checks) + " checks failed");
    if (!in_verify)
        add_verdict(s, "wave extraction (genuine up/down-wave)", pass_if(total[3] == 0),
                    std::to_string(total[2]) + " genuine, " + std::to_string(total[3]) + " edge-anchored fallbacks of " +
                        std::to_string(total[1]) + " sites");
}

inline void summarize_verify(Summary& s, const std::vector<json>& records) {
    std::vector<json> fixtures, randoms;
    const json* coffee = nullptr;
    const json* calc = nullptr;
    for (const auto& r : records) {
        const auto id = r.at("experiment").get<std::string>();
        if (id == "verify/fixture") fixtures.push_back(r);
        else if (id == "verify/coffeetime") coffee = &r;
        else if (id == "verify/calc") calc = &r;
        else randoms.push_back(r);
    }
    std::int64_t fixtures_ok = 0;
    for (const auto& f : fixtures) fixtures_ok += f.at("ok").get<bool>();
    add_verdict(s, "fixture corpus", pass_if(fixtures_ok == std::int64_t(fixtures.size())),
                std::to_string(fixtures_ok) + "/" + std::to_string(fixtures.size()) + " fixtures");
    std::int64_t closure_ok = 0, flood_ok = 0;
    for (const auto& r : randoms) {
        closure_ok += r.at("closure_equal").get<bool>() && r.at("phi_ok").get<bool>();
        flood_ok += r.at("flood_violation").is_null();
    }
    const auto of = "/" + std::to_string(randoms.size());
    add_verdict(s, "closure equivalence and phi/2", pass_if(closure_ok == std::int64_t(randoms.size())),
                std::to_string(closure_ok) + of);
    add_verdict(s, "flood containment", pass_if(flood_ok == std::int64_t(randoms.size())), std::to_string(flood_ok) + of);
    summarize_waves(s, randoms, true);
    if (coffee)
        add_verdict(s, "connected subgraph bound", pass_if(coffee->at("ok").get<bool>()),
                    std::to_string(coffee->at("checks").get<std::int64_t>()) + " counts, " +
                        std::to_string(coffee->at("violations").get<std::int64_t>()) + " above the bound");
    if (calc) {
        std::ostringstream d;
        for (const auto& v : calc->at("variants"))
            d << "rhs " << v.at("rhs_fraction").get<double>() << "h: min f " << v.at("min_f_coarse").get<double>()
              << " / " << v.at("min_f_fine").get<double>() << "; ";
        add_verdict(s, "closing calculation", pass_if(calc->at("ok").get<bool>()), d.str());
    }
    for (const auto& v : s.doc["verdicts"])
        s.rows.push_back({{"check", v.at("name")}, {"verdict", v.at("verdict")}, {"detail", v.at("detail")}});
}

}  // namespace detail

inline Summary summarize(const Context& ctx, const std::vector<json>& records) {
    Summary s;
    s.doc = {{"code_version", code_version}, {"config", experiment_json(ctx.cfg)}, {"verdicts", json::array()}};
    for (const auto& r : records) s.hard_failures += !r.at("ok").get<bool>();
    switch (ctx.cfg.command) {
        case Command::simulate: detail::summarize_time_runs(s, records, false); break;
        case Command::scan: detail::summarize_time_runs(s, records, true); break;
        case Command::closure: detail::summarize_closure(s, records); break;
        case Command::estimate_k: detail::summarize_k(s, records); break;
        case Command::slab: detail::summarize_slab(s, records); break;
        case Command::waves: detail::summarize_waves(s, records, false); break;
        case Command::verify: detail::summarize_verify(s, records); break;
    }
    s.doc["records"] = records.size();
    s.doc["hard_failures"] = s.hard_failures;
    s.doc["rows"] = s.rows;
    s.doc["status"] = s.hard_failures == 0 && !s.any_fail ? "ok" : "fail";
    return s;
}

inline std::string csv_field(const json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) {
        const auto str = v.get<std::string>();
        if (str.find_first_of(",\"\n") == std::string::npos) return str;
        std::string q = "\"";
        for (char ch : str) {
            if (ch == '"') q += '"';
            q += ch;
        }
        return q + '"';
    }
    return v.dump();
}

inline std::string to_csv(const json& rows) {
    if (rows.empty()) return "";
    std::vector<std::string> cols;
    for (const auto& [k, _] : rows.front().items()) cols.push_back(k);
    std::string out;
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
    out += '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i) out += ',';
            out += r.contains(cols[i]) ? csv_field(r.at(cols[i])) : "";
        }
        out += '\n';
    }
    return out;
}

// ------------------------------------------------------------ persistence

// FNV-1a over the bytes of trials.jsonl.
struct Checksum {
    std::uint64_t h = 0xcbf29ce484222325ull;
    void update(std::string_view s) {
        for (unsigned char ch : s) {
            h ^= ch;
            h *= 0x100000001b3ull;
        }
    }
    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

struct RunManifest {
    json config;
    std::string version = code_version;
    std::int64_t units_total = 0;
    std::int64_t units_completed = 0;
    std::uint64_t bytes = 0;
    Checksum checksum;
    std::vector<std::pair<std::string, std::pair<std::int64_t, std::int64_t>>> experiments;  // id -> (units, completed)

    json to_json() const {
        json ex = json::object();
        for (const auto& [id, c] : experiments) ex[id] = {{"units", c.first}, {"completed", c.second}};
        return {{"format", "bootperc-manifest-1"},
                {"code_version", version},
                {"config", config},
                {"units_total", units_total},
                {"units_completed", units_completed},
                {"bytes", bytes},
                {"checksum", checksum.hex()},
                {"experiments", ex},
                {"complete", units_completed == units_total}};
    }
};

inline void write_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct RunOptions {
    std::optional<std::int64_t> stop_after;  // test hook: stop once this many units are on disk
    fs::path config_dir;                     // relative fixture paths are also tried here
};

inline json load_fixtures(const RunConfig& c, const fs::path& config_dir) {
    fs::path path = c.fixtures;
    if (path.is_relative() && !fs::exists(path) && !config_dir.empty() && fs::exists(config_dir / path))
        path = config_dir / path;
    if (!fs::exists(path)) throw ConfigError("fixture corpus not found: " + c.fixtures);
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("fixture corpus is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "bootperc-fixtures-1" || !j.contains("entries"))
        throw ConfigError("fixture corpus has an unknown format");
    return j;
}

// Runs to completion (or to the stop hook) and returns the exit code.
// Throws ConfigError for bad input; anything else is an internal failure.
inline int execute(RunConfig cfg, std::ostream& log, const RunOptions& opts = {}) {
    cfg = normalize(cfg);
    Context ctx{cfg, {}};
    if (cfg.command == Command::verify) ctx.fixtures = load_fixtures(cfg, opts.config_dir);
    const int threads = effective_threads(cfg);
    const auto units = make_units(ctx);

    const fs::path dir = cfg.out;
    fs::create_directories(dir);
    const fs::path manifest_path = dir / "manifest.json", trials_path = dir / "trials.jsonl";

    RunManifest m;
    m.config = experiment_json(cfg);
    m.units_total = std::int64_t(units.size());
    for (const auto& u : units) {
        if (m.experiments.empty() || m.experiments.back().first != u.experiment) m.experiments.push_back({u.experiment, {0, 0}});
        ++m.experiments.back().second.first;
    }
    const auto mark_done = [&m](std::size_t upto) {
        std::int64_t left = std::int64_t(upto);
        for (auto& [id, c] : m.experiments) {
            c.second = std::min(left, c.first);
            left -= c.second;
        }
    };

    if (cfg.resume && fs::exists(manifest_path)) {
        json old;
        try {
            old = json::parse(read_file(manifest_path));
        } catch (const json::parse_error&) {
            throw ConfigError("resume: manifest is not valid JSON");
        }
        if (old.value("code_version", "") != code_version) throw ConfigError("resume: manifest is from another code version");
        if (old.at("config") != m.config) throw ConfigError("resume: config differs from the manifest");
        m.units_completed = old.at("units_completed").get<std::int64_t>();
        m.bytes = old.at("bytes").get<std::uint64_t>();
        if (m.units_completed > m.units_total) throw ConfigError("resume: manifest has more units than the config");
        const auto have = fs::exists(trials_path) ? read_file(trials_path) : std::string();
        if (have.size() < m.bytes) throw ConfigError("resume: trials.jsonl is shorter than the manifest records");
        m.checksum.update(std::string_view(have).substr(0, m.bytes));
        if (m.checksum.hex() != old.at("checksum").get<std::string>())
            throw ConfigError("resume: trials.jsonl checksum does not match the manifest");
        // Records past the last manifest update are dropped and redone.
        fs::resize_file(trials_path, m.bytes);
        log << "resuming at unit " << m.units_completed << " of " << m.units_total << "\n";
    } else {
        std::ofstream(trials_path, std::ios::binary | std::ios::trunc);
        fs::remove(dir / "summary.json");
        fs::remove(dir / "summary.csv");
    }
    mark_done(std::size_t(m.units_completed));
    write_atomic(manifest_path, m.to_json().dump(2) + "\n");

    const bool inner = inner_parallel(cfg.command);
    const std::size_t batch = inner ? 1 : std::size_t(64 * threads);
    std::size_t next = std::size_t(m.units_completed);
    std::ofstream trials_out(trials_path, std::ios::binary | std::ios::app);
    while (next < units.size()) {
        std::size_t end = std::min(units.size(), next + batch);
        if (opts.stop_after) end = std::min(end, std::size_t(std::max<std::int64_t>(*opts.stop_after, std::int64_t(next) + 1)));
        const auto recs = parallel_map(end - next, inner ? 1 : threads,
                                       [&](std::size_t i) { return run_unit(ctx, units[next + i], inner ? threads : 1); });
        std::string chunk;
        for (const auto& r : recs) chunk += r.dump() + "\n";
        trials_out << chunk;
        if (!trials_out.flush()) throw std::runtime_error("write failed for " + trials_path.string());
        m.checksum.update(chunk);
        m.bytes += chunk.size();
        next = end;
        m.units_completed = std::int64_t(next);
        mark_done(next);
        write_atomic(manifest_path, m.to_json().dump(2) + "\n");
        if (inner) log << units[next - 1].experiment << " done\n";
        if (opts.stop_after && std::int64_t(next) >= *opts.stop_after && next < units.size()) {
            log << "stopped after " << next << " units\n";
            return exit_stopped;
        }
    }
    trials_out.close();

    std::vector<json> records;
    {
        std::istringstream in(read_file(trials_path));
        for (std::string line; std::getline(in, line);)
            if (!line.empty()) records.push_back(json::parse(line));
    }
    if (records.size() != units.size()) throw std::runtime_error("trials.jsonl does not hold one record per unit");
    const auto s = summarize(ctx, records);
    write_atomic(dir / "summary.json", s.doc.dump(2) + "\n");
    write_atomic(dir / "summary.csv", to_csv(s.rows));
    for (const auto& v : s.doc.at("verdicts"))
        log << v.at("verdict").get<std::string>() << "  " << v.at("name").get<std::string>() << "  "
            << v.at("detail").get<std::string>() << "\n";
    log << "hard failures: " << s.hard_failures << "\n";
    return s.hard_failures == 0 && !s.any_fail ? exit_ok : exit_failed;
}

inline std::string error_json(const std::string& kind, const std::string& message) {
    return json{{"error", kind}, {"message", message}}.dump();
}

// execute() with the exit-code contract applied to errors: a bad config
// or resume mismatch is 2, any other failure 1. Errors go to `err` as one
// line of JSON.
inline int run(const RunConfig& cfg, std::ostream& log, std::ostream& err, const RunOptions& opts = {}) {
    try {
        return execute(cfg, log, opts);
    } catch (const ConfigError& e) {
        err << error_json("invalid_config", e.what()) << "\n";
        return exit_invalid;
    } catch (const std::exception& e) {
        err << error_json("failure", e.what()) << "\n";
        return exit_failed;
    }
}

}  // namespace bootperc::runner
