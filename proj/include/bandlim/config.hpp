#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bandlim/band_operator.hpp"
#include "bandlim/limits.hpp"
#include "bandlim/space.hpp"

namespace bandlim {

/// All schema violations found in a config, reported together.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> violations)
        : std::runtime_error(join(violations)), violations_(std::move(violations)) {}
    const std::vector<std::string>& violations() const { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "config invalid:";
        for (const auto& x : v) s += "\n  - " + x;
        return s;
    }
    std::vector<std::string> violations_;
};

/// Validated analysis configuration. Strict: unknown keys are rejected and
/// every requested analysis must have its parameters present.
struct AnalysisConfig {
    SpacePtr space;
    std::vector<BandOperator::OffsetTerm> terms;
    std::string coo_file;                          // alternative operator source
    NormRegime regime = NormRegime::pinf;
    std::vector<std::string> analyses;             // canonical order
    std::vector<DirectionSequence> directions;

    double richness_tol = 1e-6;
    double residual_tol = 1e-6;
    double delta = 0.4;
    double max_buffer = 16.0;
    std::int64_t tail_lo = 1000, tail_hi = 10000;
    std::int64_t refwin_radius = 4;

    std::int64_t lower_norm_radius = -1;           // centered-ball column set
    double lower_norm_s = 0.0;                     // 0: unrestricted only
    std::vector<double> ql_L_values;
    std::vector<int> smoothing_n;
    std::vector<double> lp_estimates;
    std::vector<std::int64_t> nu_curve_radii;

    unsigned seed = 1;
    std::string out_dir = "out";
    int threads = 1;
    nlohmann::json raw;                            // echoed into the report
};

namespace detail {

inline void check_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                       const std::string& where, std::vector<std::string>& bad) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            bad.push_back("unknown key '" + it.key() + "' in " + where);
}

inline std::vector<std::int64_t> int_vector(const nlohmann::json& j, const std::string& where,
                                            std::vector<std::string>& bad) {
    std::vector<std::int64_t> v;
    if (!j.is_array()) { bad.push_back(where + " must be an array of integers"); return v; }
    for (const auto& e : j) {
        if (!e.is_number_integer()) { bad.push_back(where + " must contain only integers"); return {}; }
        v.push_back(e.get<std::int64_t>());
    }
    return v;
}

/// Distance-table CSV (point-id, point-id, distance) -> explicit Space.
inline SpacePtr space_from_table_csv(const std::string& path, std::vector<std::string>& bad) {
    std::ifstream in(path);
    if (!in) { bad.push_back("space.file: cannot open '" + path + "'"); return nullptr; }
    std::vector<std::string> ids;
    std::map<std::string, int> idx;
    std::vector<std::tuple<int, int, Rational>> entries;
    std::string line;
    auto intern = [&](const std::string& s) {
        auto it = idx.find(s);
        if (it != idx.end()) return it->second;
        idx[s] = static_cast<int>(ids.size());
        ids.push_back(s);
        return static_cast<int>(ids.size()) - 1;
    };
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string a, b, d;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, d)) {
            bad.push_back("space.file line " + std::to_string(lineno) + ": expected 3 fields");
            return nullptr;
        }
        if (lineno == 1 && d.find_first_not_of("0123456789+-./ ") != std::string::npos)
            continue; // header row
        try {
            entries.push_back({intern(a), intern(b), Rational::parse(d)});
        } catch (const std::exception& e) {
            bad.push_back("space.file line " + std::to_string(lineno) + ": " + e.what());
            return nullptr;
        }
    }
    const int n = static_cast<int>(ids.size());
    std::vector<std::vector<Rational>> table(n, std::vector<Rational>(n, Rational(0)));
    std::vector<std::vector<char>> seen(n, std::vector<char>(n, 0));
    for (int i = 0; i < n; ++i) seen[i][i] = 1;
    for (auto& [i, j, r] : entries) {
        table[i][j] = r;
        table[j][i] = r;
        seen[i][j] = seen[j][i] = 1;
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (!seen[i][j]) {
                bad.push_back("space.file: missing distance between '" + ids[i] + "' and '" +
                              ids[j] + "'");
                return nullptr;
            }
    try {
        return Space::from_table(std::move(ids), std::move(table));
    } catch (const std::exception& e) {
        bad.push_back(std::string("space.file: ") + e.what());
        return nullptr;
    }
}

} // namespace detail

/// Parses and validates a JSON config. Throws ConfigError listing every
/// violation found (strict mode: unknown keys rejected).
inline AnalysisConfig parse_config(const std::string& text) {
    std::vector<std::string> bad;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError({std::string("not valid JSON: ") + e.what()});
    }
    if (!j.is_object()) throw ConfigError({"top level must be a JSON object"});

    AnalysisConfig cfg;
    cfg.raw = j;
    detail::check_keys(j,
                       {"space", "operator", "regime", "analyses", "directions", "tolerances",
                        "limits", "lower_norms", "quasilocality", "smoothing", "norms",
                        "fredholm", "seed", "output"},
                       "top level", bad);

    // space
    if (!j.contains("space") || !j["space"].is_object()) {
        bad.push_back("missing required object 'space'");
    } else {
        const auto& s = j["space"];
        std::string kind = s.value("kind", "grid");
        if (kind == "grid") {
            detail::check_keys(s, {"kind", "dim", "lo", "hi", "metric"}, "space", bad);
            int dim = s.value("dim", 0);
            auto lo = detail::int_vector(s.value("lo", nlohmann::json::array()), "space.lo", bad);
            auto hi = detail::int_vector(s.value("hi", nlohmann::json::array()), "space.hi", bad);
            std::string metric = s.value("metric", "l1");
            if (metric != "l1" && metric != "linf")
                bad.push_back("space.metric must be 'l1' or 'linf'");
            if (bad.empty()) {
                try {
                    cfg.space = make_grid_space(dim, lo, hi,
                                                metric == "l1" ? GridMetric::l1 : GridMetric::linf);
                } catch (const std::exception& e) {
                    bad.push_back(std::string("space: ") + e.what());
                }
            }
        } else if (kind == "table") {
            detail::check_keys(s, {"kind", "file"}, "space", bad);
            if (!s.contains("file") || !s["file"].is_string())
                bad.push_back("space.file required for kind 'table'");
            else
                cfg.space = detail::space_from_table_csv(s["file"].get<std::string>(), bad);
        } else {
            bad.push_back("space.kind must be 'grid' or 'table'");
        }
    }

    // operator
    if (!j.contains("operator") || !j["operator"].is_object()) {
        bad.push_back("missing required object 'operator'");
    } else {
        const auto& o = j["operator"];
        detail::check_keys(o, {"terms", "coo_file"}, "operator", bad);
        if (o.contains("terms") == o.contains("coo_file"))
            bad.push_back("operator needs exactly one of 'terms' or 'coo_file'");
        if (o.contains("terms")) {
            if (!o["terms"].is_array()) bad.push_back("operator.terms must be an array");
            else
                for (const auto& t : o["terms"]) {
                    if (!t.is_object()) { bad.push_back("operator.terms entries must be objects"); break; }
                    detail::check_keys(t, {"offset", "coefficient"}, "operator.terms[]", bad);
                    BandOperator::OffsetTerm term;
                    term.offset = detail::int_vector(t.value("offset", nlohmann::json::array()),
                                                     "operator.terms[].offset", bad);
                    if (!t.contains("coefficient") || !t["coefficient"].is_string())
                        bad.push_back("operator.terms[].coefficient must be a string expression");
                    else
                        term.coefficient = t["coefficient"].get<std::string>();
                    cfg.terms.push_back(std::move(term));
                }
        }
        if (o.contains("coo_file")) {
            if (!o["coo_file"].is_string()) bad.push_back("operator.coo_file must be a string");
            else cfg.coo_file = o["coo_file"].get<std::string>();
        }
    }

    // regime
    if (j.contains("regime")) {
        std::string r = j["regime"].is_string() ? j["regime"].get<std::string>() : "";
        if (r == "p1") cfg.regime = NormRegime::p1;
        else if (r == "pinf") cfg.regime = NormRegime::pinf;
        else if (r == "p0") cfg.regime = NormRegime::p0;
        else bad.push_back("regime must be one of 'p1', 'pinf', 'p0'");
    }

    // analyses
    static const std::vector<std::string> canonical = {
        "norms", "decompose", "quasilocality", "smoothing",
        "limits", "lower-norms", "parametrix", "fredholm"};
    std::set<std::string> requested;
    if (!j.contains("analyses") || !j["analyses"].is_array() || j["analyses"].empty()) {
        bad.push_back("missing required nonempty array 'analyses'");
    } else {
        for (const auto& a : j["analyses"]) {
            std::string name = a.is_string() ? a.get<std::string>() : "";
            if (std::find(canonical.begin(), canonical.end(), name) == canonical.end())
                bad.push_back("unknown analysis '" + name + "'");
            else requested.insert(name);
        }
    }
    for (const auto& name : canonical)
        if (requested.count(name)) cfg.analyses.push_back(name);

    // directions
    if (j.contains("directions")) {
        if (!j["directions"].is_array()) bad.push_back("directions must be an array");
        else
            for (const auto& d : j["directions"]) {
                if (!d.is_object()) { bad.push_back("directions entries must be objects"); continue; }
                detail::check_keys(d, {"ray", "points", "label"}, "directions[]", bad);
                std::string label = d.value("label", "");
                try {
                    if (d.contains("ray") == d.contains("points")) {
                        bad.push_back("directions[] needs exactly one of 'ray' or 'points'");
                    } else if (d.contains("ray")) {
                        cfg.directions.push_back(DirectionSequence::make_ray(
                            detail::int_vector(d["ray"], "directions[].ray", bad), label));
                    } else {
                        std::vector<std::vector<std::int64_t>> pts;
                        for (const auto& p : d["points"])
                            pts.push_back(detail::int_vector(p, "directions[].points[]", bad));
                        if (label.empty()) bad.push_back("explicit direction needs a label");
                        cfg.directions.push_back(DirectionSequence::make_explicit(pts, label));
                    }
                } catch (const std::exception& e) {
                    bad.push_back(std::string("directions[]: ") + e.what());
                }
            }
    }
    for (const char* needs : {"limits", "parametrix", "fredholm"})
        if (requested.count(needs) && cfg.directions.empty())
            bad.push_back(std::string("analysis '") + needs +
                          "' requires a nonempty 'directions' array");

    // tolerances
    if (j.contains("tolerances")) {
        const auto& t = j["tolerances"];
        detail::check_keys(t, {"richness", "residual", "delta", "max_buffer"}, "tolerances", bad);
        cfg.richness_tol = t.value("richness", cfg.richness_tol);
        cfg.residual_tol = t.value("residual", cfg.residual_tol);
        cfg.delta = t.value("delta", cfg.delta);
        cfg.max_buffer = t.value("max_buffer", cfg.max_buffer);
        if (cfg.richness_tol <= 0 || cfg.residual_tol <= 0 || cfg.delta <= 0 ||
            cfg.max_buffer <= 0)
            bad.push_back("tolerances must all be positive");
    }

    // limits
    if (j.contains("limits")) {
        const auto& t = j["limits"];
        detail::check_keys(t, {"tail", "refwin_radius"}, "limits", bad);
        if (t.contains("tail")) {
            auto tail = detail::int_vector(t["tail"], "limits.tail", bad);
            if (tail.size() != 2 || tail[0] >= tail[1])
                bad.push_back("limits.tail must be [lo, hi] with lo < hi");
            else { cfg.tail_lo = tail[0]; cfg.tail_hi = tail[1]; }
        }
        cfg.refwin_radius = t.value("refwin_radius", cfg.refwin_radius);
        if (cfg.refwin_radius < 1) bad.push_back("limits.refwin_radius must be >= 1");
    }

    // lower_norms
    if (j.contains("lower_norms")) {
        const auto& t = j["lower_norms"];
        detail::check_keys(t, {"radius", "s"}, "lower_norms", bad);
        cfg.lower_norm_radius = t.value("radius", cfg.lower_norm_radius);
        cfg.lower_norm_s = t.value("s", cfg.lower_norm_s);
    }
    if (requested.count("lower-norms") && cfg.lower_norm_radius < 0)
        bad.push_back("analysis 'lower-norms' requires lower_norms.radius >= 0");

    // quasilocality
    if (j.contains("quasilocality")) {
        const auto& t = j["quasilocality"];
        detail::check_keys(t, {"L_values"}, "quasilocality", bad);
        if (t.contains("L_values"))
            for (const auto& v : t["L_values"]) {
                if (!v.is_number() || v.get<double>() <= 0.0) {
                    bad.push_back("quasilocality.L_values must be positive numbers");
                    break;
                }
                cfg.ql_L_values.push_back(v.get<double>());
            }
    }
    if (cfg.ql_L_values.empty())
        for (double L : {0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0}) cfg.ql_L_values.push_back(L);

    // smoothing
    if (j.contains("smoothing")) {
        const auto& t = j["smoothing"];
        detail::check_keys(t, {"n"}, "smoothing", bad);
        if (t.contains("n"))
            for (const auto& v : t["n"]) {
                if (!v.is_number_integer() || v.get<int>() < 1) {
                    bad.push_back("smoothing.n must be integers >= 1");
                    break;
                }
                cfg.smoothing_n.push_back(v.get<int>());
            }
    }
    if (cfg.smoothing_n.empty())
        for (int n : {1, 2, 4, 8, 16, 32, 64}) cfg.smoothing_n.push_back(n);

    // norms
    if (j.contains("norms")) {
        const auto& t = j["norms"];
        detail::check_keys(t, {"lp_estimate"}, "norms", bad);
        if (t.contains("lp_estimate"))
            for (const auto& v : t["lp_estimate"]) {
                double p = v.is_number() ? v.get<double>() : 0.0;
                if (!(p > 1.0)) { bad.push_back("norms.lp_estimate entries must be > 1"); break; }
                cfg.lp_estimates.push_back(p);
            }
    }

    // fredholm
    if (j.contains("fredholm")) {
        const auto& t = j["fredholm"];
        detail::check_keys(t, {"nu_curve_radii"}, "fredholm", bad);
        if (t.contains("nu_curve_radii"))
            cfg.nu_curve_radii = detail::int_vector(t["nu_curve_radii"],
                                                    "fredholm.nu_curve_radii", bad);
    }

    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) bad.push_back("seed must be a nonnegative integer");
        else cfg.seed = j["seed"].get<unsigned>();
    }
    if (j.contains("output")) {
        const auto& t = j["output"];
        detail::check_keys(t, {"dir"}, "output", bad);
        if (t.contains("dir")) {
            if (!t["dir"].is_string()) bad.push_back("output.dir must be a string");
            else cfg.out_dir = t["dir"].get<std::string>();
        }
    }

    if (!bad.empty()) throw ConfigError(std::move(bad));
    return cfg;
}

inline AnalysisConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace bandlim
