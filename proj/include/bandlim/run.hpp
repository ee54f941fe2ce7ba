#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bandlim/config.hpp"
#include "bandlim/fredholm.hpp"
#include "bandlim/quasilocal.hpp"

namespace bandlim {

namespace detail {

/// Rounds to 12 significant digits so reports are compact and byte-stable.
inline double q12(double x) {
    if (!std::isfinite(x)) return x;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::strtod(buf, nullptr);
}

inline nlohmann::json claim(double value, const char* tag) {
    if (std::isinf(value))
        return {{"value", value > 0 ? "+inf" : "-inf"}, {"tag", tag}};
    return {{"value", q12(value)}, {"tag", tag}};
}

inline const char* method_tag(LowerNormMethod m) {
    switch (m) {
        case LowerNormMethod::lp_exact: return "exact";
        case LowerNormMethod::inverse_norm: return "exact";
        case LowerNormMethod::sampled: return "sampled";
    }
    return "?";
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
}

} // namespace detail

/// Runs every requested analysis, writing report.json plus CSV side files
/// into cfg.out_dir. Deterministic given (config, seed). Per-analysis
/// failures are recorded in the report; independent analyses still run.
inline nlohmann::json run(const AnalysisConfig& cfg) {
    namespace fs = std::filesystem;
    using nlohmann::json;
    fs::create_directories(cfg.out_dir);
    const fs::path out(cfg.out_dir);

    std::vector<std::string> warnings;
    BandOperator A = [&] {
        if (!cfg.coo_file.empty()) {
            std::ifstream in(cfg.coo_file);
            if (!in) throw ConfigError({"operator.coo_file: cannot open '" + cfg.coo_file + "'"});
            return BandOperator::import_coo(cfg.space, in);
        }
        return BandOperator::from_offsets(cfg.space, cfg.terms, &warnings);
    }();

    json rep;
    rep["tool"] = "bandlim analyze";
    rep["seed"] = cfg.seed;
    rep["threads"] = cfg.threads;
    rep["regime"] = regime_name(cfg.regime);
    rep["config"] = cfg.raw;
    rep["tolerances"] = {{"richness", cfg.richness_tol},
                         {"residual", cfg.residual_tol},
                         {"delta", cfg.delta},
                         {"max_buffer", cfg.max_buffer}};
    rep["operator"] = {{"points", cfg.space->size()},
                       {"nnz", A.nnz()},
                       {"propagation", A.propagation().to_double()}};
    rep["warnings"] = warnings;
    json& an = rep["analyses"] = json::object();

    {   // operator echo for external cross-checking
        std::ostringstream coo;
        A.export_coo(coo);
        detail::write_file(out / "operator.csv", coo.str());
    }

    auto guard = [&](const std::string& name, auto&& body) {
        try {
            body(an[name]);
        } catch (const std::exception& e) {
            an[name] = json{{"error", e.what()}};
        }
    };

    for (const std::string& name : cfg.analyses) {
        if (name == "norms") guard(name, [&](json& r) {
            r["p1"] = detail::claim(A.op_norm(NormRegime::p1), "exact");
            r["pinf"] = detail::claim(A.op_norm(NormRegime::pinf), "exact");
            r["p0"] = detail::claim(A.op_norm(NormRegime::p0), "exact");
            int N = cfg.space->geometry_profile(A.propagation());
            r["band_norm_bound"] = detail::claim(A.max_abs_entry() * N, "certified");
            for (double p : cfg.lp_estimates) {
                char key[32];
                std::snprintf(key, sizeof key, "lp_%.6g", p);
                r[key] = detail::claim(A.op_norm_lp_estimate(p, cfg.seed), "sampled");
            }
        });
        else if (name == "decompose") guard(name, [&](json& r) {
            auto terms = A.decompose_band();
            auto back = BandOperator::from_decomposition(cfg.space, terms);
            double err = subtract(back, A).max_abs_entry();
            int N = cfg.space->geometry_profile(A.propagation());
            r["term_count"] = terms.size();
            r["ball_bound_N"] = N;
            r["roundtrip_error"] = detail::claim(err, "exact");
        });
        else if (name == "quasilocality") guard(name, [&](json& r) {
            std::string csv = "L,modulus\n";
            json curve = json::array();
            for (double L : cfg.ql_L_values) {
                double m = ql_modulus(A, L, cfg.regime);
                curve.push_back({{"L", detail::q12(L)}, {"modulus", detail::claim(m, "exact")}});
                char line[96];
                std::snprintf(line, sizeof line, "%.12g,%.12g\n", L, m);
                csv += line;
            }
            detail::write_file(out / "ql_modulus.csv", csv);
            r["curve"] = curve;
            r["curve_csv"] = "ql_modulus.csv";
            json certs = json::array();
            for (double eps : {0.1, 0.5, 1.0}) {
                double L = band_commutator_certificate(A, eps, cfg.regime);
                json c{{"eps", eps}};
                if (std::isinf(L)) c["L"] = "+inf";
                else c["L"] = detail::claim(L, "certified");
                certs.push_back(std::move(c));
            }
            r["certificates"] = certs;
        });
        else if (name == "smoothing") guard(name, [&](json& r) {
            double r_eff = std::max(A.propagation().to_double(), 1.0);
            auto pou = build_partition(cfg.space, r_eff, 0.5);
            int N = cfg.space->geometry_profile(A.propagation());
            double a_norm = A.op_norm(cfg.regime);
            json ladder = json::array();
            for (int n : cfg.smoothing_n) {
                auto Mn = smooth(A, n, cfg.regime, pou);
                ladder.push_back(
                    {{"n", n},
                     {"distance", detail::claim(subtract(Mn, A).op_norm(cfg.regime), "exact")},
                     {"norm", detail::claim(Mn.op_norm(cfg.regime), "exact")},
                     {"bound", detail::claim(A.propagation().to_double() * N * a_norm / n,
                                             "certified")}});
            }
            r["ladder"] = ladder;
        });
        else if (name == "limits") guard(name, [&](json& r) {
            auto spectrum = spectrum_sample(A, cfg.directions, cfg.tail_lo, cfg.tail_hi,
                                            cfg.richness_tol, cfg.refwin_radius);
            json members = json::array();
            for (std::size_t i = 0; i < spectrum.size(); ++i) {
                std::ostringstream coo;
                spectrum[i].op.export_coo(coo);
                std::string fname = "limit_" + std::to_string(i) + ".csv";
                detail::write_file(out / fname, coo.str());
                members.push_back({{"direction", spectrum[i].direction_label},
                                   {"rich", spectrum[i].rich},
                                   {"cauchy_residual",
                                    detail::claim(spectrum[i].cauchy_residual, "sampled")},
                                   {"coo_csv", fname}});
            }
            r["distinct_members"] = spectrum.size();
            r["members"] = members;
            r["note"] = "sampled spectrum; richness certified only on the tested tail";
        });
        else if (name == "lower-norms") guard(name, [&](json& r) {
            const int center = detail::center_point(cfg.space);
            SupportSet F = SupportSet::ball(cfg.space, center, Rational(cfg.lower_norm_radius));
            auto ln = lower_norm(A, F, cfg.regime, true, cfg.seed);
            r["F_radius"] = cfg.lower_norm_radius;
            r["nu"] = detail::claim(ln.value, detail::method_tag(ln.method));
            r["method"] = method_name(ln.method);
            if (cfg.lower_norm_s > 0.0) {
                auto lns = restricted_lower_norm(A, F, cfg.lower_norm_s, cfg.regime, true, cfg.seed);
                r["s"] = cfg.lower_norm_s;
                r["nu_s"] = detail::claim(lns.value, detail::method_tag(lns.method));
            }
            double rr = A.propagation().to_double();
            if (rr > 0.0 && A.op_norm(cfg.regime) > 0.0) {
                int N = cfg.space->geometry_profile(A.propagation());
                r["localization_radius"] = detail::claim(
                    localization_radius(cfg.delta, A.op_norm(cfg.regime), rr, N), "certified");
            }
        });
        else if (name == "parametrix" || name == "fredholm") guard(name, [&](json& r) {
            FredholmOptions opt;
            opt.regime = cfg.regime;
            opt.directions = cfg.directions;
            opt.tail_lo = cfg.tail_lo;
            opt.tail_hi = cfg.tail_hi;
            opt.richness_tol = cfg.richness_tol;
            opt.refwin_radius = cfg.refwin_radius;
            opt.residual_tol = cfg.residual_tol;
            opt.delta = cfg.delta;
            opt.max_buffer = cfg.max_buffer;
            opt.nu_curve_radii = cfg.nu_curve_radii;
            opt.seed = cfg.seed;
            auto fr = fredholm_verdict(A, opt);

            json verdicts = json::array();
            for (const auto& v : fr.verdicts) {
                const char* tag = v.method == "laurent-certified" ? "certified" : "heuristic";
                verdicts.push_back({{"direction", v.direction},
                                    {"rich", v.rich},
                                    {"constant_coefficients", v.constant_coefficients},
                                    {"conclusive", v.conclusive},
                                    {"invertible", v.invertible},
                                    {"method", v.method},
                                    {"inverse_norm", detail::claim(v.inverse_norm, tag)},
                                    {"nu", detail::claim(v.nu, "exact")}});
            }
            r["spectrum"] = verdicts;
            r["all_rich"] = fr.all_rich;
            r["all_invertible"] = fr.all_invertible;
            r["sup_inverse_norm_M"] = detail::claim(fr.M, "sampled");
            if (fr.infimum) {
                r["spectrum_nu_infimum"] = {
                    {"inf", detail::claim(fr.infimum->inf_value, "exact")},
                    {"attaining_index", fr.infimum->attaining_index}};
            }
            if (fr.parametrix) {
                const auto& pm = *fr.parametrix;
                r["parametrix"] = {{"epsilon", detail::claim(pm.epsilon, "certified")},
                                   {"M", detail::claim(pm.M, "sampled")},
                                   {"N", pm.N},
                                   {"T0_left_norm", detail::claim(pm.T0_left_norm, "exact")},
                                   {"T0_right_norm", detail::claim(pm.T0_right_norm, "exact")},
                                   {"AL_norm", detail::claim(pm.AL_norm, "exact")},
                                   {"AR_norm", detail::claim(pm.AR_norm, "exact")},
                                   {"local_norm_bound",
                                    detail::claim(pm.local_norm_bound, "exact")},
                                   {"exceptional_patches",
                                    pm.exceptional_left.size() + pm.exceptional_right.size()},
                                   {"final_defect", detail::claim(pm.final_defect, "exact")}};
                std::string csv = "radius,left_aq,left_qa,right_aq,right_qa\n";
                for (const auto& p : pm.curve) {
                    char line[160];
                    std::snprintf(line, sizeof line, "%lld,%.12g,%.12g,%.12g,%.12g\n",
                                  static_cast<long long>(p.radius), p.left_aq, p.left_qa,
                                  p.right_aq, p.right_qa);
                    csv += line;
                }
                detail::write_file(out / "residual_curve.csv", csv);
                r["residual_curve_csv"] = "residual_curve.csv";
            }
            if (name == "fredholm") {
                r["verdict"] = fr.verdict;
                if (fr.eq16_checked) {
                    r["eq16"] = {{"ok", fr.eq16_ok},
                                 {"min_margin", detail::claim(fr.eq16_margin, "exact")}};
                }
                std::string csv = "radius,nu,method\n";
                json curve = json::array();
                for (const auto& p : fr.nu_curve) {
                    char line[128];
                    std::snprintf(line, sizeof line, "%lld,%.12g,%s\n",
                                  static_cast<long long>(p.radius), p.value, p.method.c_str());
                    csv += line;
                    curve.push_back({{"radius", p.radius},
                                     {"nu", detail::claim(p.value,
                                                          p.method == "sampled" ? "sampled"
                                                                                : "exact")}});
                }
                detail::write_file(out / "nu_curve.csv", csv);
                r["nu_curve"] = curve;
                r["nu_curve_csv"] = "nu_curve.csv";
                r["caveats"] = fr.caveats;
            }
        });
    }

    detail::write_file(out / "report.json", rep.dump(2) + "\n");
    return rep;
}

} // namespace bandlim
