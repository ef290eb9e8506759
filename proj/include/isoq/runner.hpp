#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "isoq/detect.hpp"
#include "isoq/fcq.hpp"
#include "isoq/fields.hpp"
#include "isoq/frame.hpp"
#include "isoq/json_writer.hpp"
#include "isoq/profiles.hpp"

namespace isoq {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutputSpec {
    std::string dir;
    std::vector<std::string> fields;  // extra CSV groups: alpha, beta, c, k, bold_k
    bool dump_series = false;
};

struct RunConfig {
    SurfaceSpec surface;
    int depth = 6;
    RSeries r;
    std::map<std::string, double> tolerances;
    std::vector<std::string> checks;  // empty = every applicable check
    OutputSpec output;
};

inline const std::vector<std::string>& known_checks() {
    static const std::vector<std::string> k = {
        "frame",      "conservation", "parallelism",     "consistency", "pairing",
        "cmc",        "musso_nicolodi", "type1",         "type2",       "type3",
        "type2_conformal", "profile_ode"};
    return k;
}

namespace cfg_detail {

using nlohmann::json;

inline void require_keys(const json& o, const std::vector<std::string>& allowed,
                         const std::string& ctx) {
    if (!o.is_object()) throw ConfigError(ctx + ": expected an object");
    for (auto it = o.begin(); it != o.end(); ++it)
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw ConfigError(ctx + ": unknown key '" + it.key() + "'");
}

inline double num(const json& o, const std::string& key, const std::string& ctx) {
    if (!o.contains(key)) throw ConfigError(ctx + ": missing '" + key + "'");
    if (!o[key].is_number()) throw ConfigError(ctx + ": '" + key + "' must be a number");
    return o[key].get<double>();
}

inline double num_or(const json& o, const std::string& key, double fallback) {
    if (!o.contains(key)) return fallback;
    if (!o[key].is_number()) throw ConfigError("'" + key + "' must be a number");
    return o[key].get<double>();
}

inline ProfileSpec parse_profile(const json& o, const std::filesystem::path& base) {
    if (!o.contains("kind")) throw ConfigError("profile: missing 'kind'");
    const std::string kind = o["kind"].get<std::string>();
    ProfileSpec p;
    if (kind == "constant") {
        require_keys(o, {"kind", "k0"}, "profile");
        p.kind = ProfileKind::constant;
        p.k0 = num(o, "k0", "profile");
    } else if (kind == "formula") {
        require_keys(o, {"kind", "family", "offset", "terms", "coeffs"}, "profile");
        p.kind = ProfileKind::formula;
        p.formula.family = o.contains("family") ? o["family"].get<std::string>() : "sin";
        p.formula.offset = num_or(o, "offset", 0.0);
        if (o.contains("terms")) {
            for (const auto& t : o["terms"]) {
                require_keys(t, {"amplitude", "omega", "phase"}, "profile.terms");
                p.formula.terms.push_back({num(t, "amplitude", "term"), num(t, "omega", "term"),
                                           num_or(t, "phase", 0.0)});
            }
        }
        if (o.contains("coeffs"))
            for (const auto& c : o["coeffs"]) p.formula.coeffs.push_back(c.get<double>());
    } else if (kind == "elastic") {
        require_keys(o, {"kind", "alpha", "k0", "k0_prime", "forcing"}, "profile");
        p.kind = ProfileKind::elastic;
        p.alpha = num_or(o, "alpha", 0.0);
        p.k_init = num(o, "k0", "profile");
        p.kp_init = num_or(o, "k0_prime", 0.0);
        p.forcing = num_or(o, "forcing", 0.0);
    } else if (kind == "samples") {
        require_keys(o, {"kind", "values", "csv"}, "profile");
        p.kind = ProfileKind::samples;
        if (o.contains("values")) {
            for (const auto& v : o["values"]) p.sample_values.push_back(v.get<double>());
        } else if (o.contains("csv")) {
            std::ifstream in(base / o["csv"].get<std::string>());
            if (!in) throw ConfigError("profile: cannot open csv '" + o["csv"].get<std::string>() + "'");
            p.sample_values = read_csv_column(in, "k");
        } else {
            throw ConfigError("profile: samples need 'values' or 'csv'");
        }
    } else {
        throw ConfigError("profile: unknown kind '" + kind + "'");
    }
    return p;
}

}  // namespace cfg_detail

inline RunConfig parse_config(const nlohmann::json& j,
                              const std::filesystem::path& base_dir = ".") {
    using cfg_detail::num;
    using cfg_detail::require_keys;
    require_keys(j, {"schema", "surface", "grid", "depth", "r", "tolerances", "checks", "output"},
                 "config");
    if (j.contains("schema") && j["schema"].get<int>() != 1)
        throw ConfigError("config: unsupported schema version");

    RunConfig cfg;
    if (!j.contains("surface")) throw ConfigError("config: missing 'surface'");
    const auto& s = j["surface"];
    require_keys(s, {"kind", "C", "profile"}, "surface");
    const std::string kind = s.contains("kind") ? s["kind"].get<std::string>() : "";
    if (kind == "revolution")
        cfg.surface.kind = SurfaceKind::revolution;
    else if (kind == "cone")
        cfg.surface.kind = SurfaceKind::cone;
    else if (kind == "cylinder")
        cfg.surface.kind = SurfaceKind::cylinder;
    else
        throw ConfigError("surface: kind must be revolution, cone or cylinder");
    if (cfg.surface.kind == SurfaceKind::cylinder) {
        if (s.contains("C")) throw ConfigError("surface: cylinders take no C");
    } else {
        cfg.surface.C = num(s, "C", "surface");
        if (cfg.surface.kind == SurfaceKind::revolution && !(cfg.surface.C < 0))
            throw ConfigError("surface: revolution requires C < 0");
        if (cfg.surface.kind == SurfaceKind::cone && !(cfg.surface.C > 0))
            throw ConfigError("surface: cone requires C > 0");
    }
    if (!s.contains("profile")) throw ConfigError("surface: missing 'profile'");
    cfg.surface.profile = cfg_detail::parse_profile(s["profile"], base_dir);

    if (!j.contains("grid")) throw ConfigError("config: missing 'grid'");
    const auto& g = j["grid"];
    require_keys(g, {"n", "u_min", "u_max", "periodic"}, "grid");
    cfg.surface.grid.n = static_cast<int>(num(g, "n", "grid"));
    cfg.surface.grid.u_min = num(g, "u_min", "grid");
    cfg.surface.grid.u_max = num(g, "u_max", "grid");
    cfg.surface.grid.periodic = g.contains("periodic") && g["periodic"].get<bool>();
    try {
        cfg.surface.grid.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }

    cfg.depth = j.contains("depth") ? static_cast<int>(num(j, "depth", "config")) : 6;
    if (cfg.depth < 1) throw ConfigError("config: depth must be at least 1");
    if (cfg.surface.profile.kind == ProfileKind::samples) {
        if (cfg.depth > 4)
            throw ConfigError("insufficient smoothness: sampled profiles cap depth at 4");
        if (static_cast<int>(cfg.surface.profile.sample_values.size()) != cfg.surface.grid.n)
            throw ConfigError("profile: sample count does not match grid n");
    }

    if (j.contains("r")) {
        cfg.r.coeff.clear();
        for (const auto& v : j["r"]) cfg.r.coeff.push_back(v.get<double>());
    }
    try {
        cfg.r.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }

    if (j.contains("tolerances")) {
        require_keys(j["tolerances"],
                     {"frame", "conservation", "parallelism", "consistency", "pairing", "detect"},
                     "tolerances");
        for (auto it = j["tolerances"].begin(); it != j["tolerances"].end(); ++it) {
            const double v = it.value().get<double>();
            if (!(v > 0)) throw ConfigError("tolerances must be positive");
            cfg.tolerances[it.key()] = v;
        }
    }

    if (j.contains("checks")) {
        for (const auto& c : j["checks"]) {
            const std::string name = c.get<std::string>();
            if (std::find(known_checks().begin(), known_checks().end(), name) ==
                known_checks().end())
                throw ConfigError("config: unknown check name '" + name + "'");
            cfg.checks.push_back(name);
        }
        for (const std::string& name : cfg.checks) {
            if (name.rfind("type", 0) == 0 && name.size() == 5 && std::isdigit(name[4])) {
                const int d = name[4] - '0';
                if (cfg.depth < d + 1)
                    throw ConfigError("config: depth must be at least d+1 for type-d checks");
            }
        }
    }

    if (j.contains("output")) {
        const auto& o = j["output"];
        require_keys(o, {"dir", "fields", "dump_series"}, "output");
        if (o.contains("dir")) cfg.output.dir = o["dir"].get<std::string>();
        if (o.contains("fields"))
            for (const auto& f : o["fields"]) cfg.output.fields.push_back(f.get<std::string>());
        if (o.contains("dump_series")) cfg.output.dump_series = o["dump_series"].get<bool>();
    }
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j, path.has_parent_path() ? path.parent_path() : ".");
}

struct CheckRow {
    std::string name;
    bool verdict = false;
    bool inconclusive = false;
    double residual = 0.0;
    double tolerance = 0.0;
    std::vector<std::pair<std::string, double>> constants;
    std::string note;
};

struct RunOutput {
    int exit_code = 0;
    std::string report;
    std::map<std::string, std::string> files;  // relative path -> contents
};

namespace run_detail {

inline double tol_of(const RunConfig& cfg, const std::string& name, bool sampled) {
    auto it = cfg.tolerances.find(name);
    if (it != cfg.tolerances.end()) return it->second;
    if (name == "conservation") return 1e-8;
    if (name == "detect") return sampled ? 1e-3 : 1e-6;
    return sampled ? 1e-3 : 1e-7;  // frame, parallelism, consistency, pairing
}

inline void emit_check(JsonWriter& w, const CheckRow& row) {
    w.begin_object();
    w.key("check");
    w.value(row.name);
    w.key("verdict");
    w.value(row.verdict);
    w.key("status");
    w.value(row.inconclusive ? "inconclusive" : "conclusive");
    w.key("residual");
    w.value(row.residual);
    w.key("tolerance");
    w.value(row.tolerance);
    w.key("constants");
    w.begin_object();
    for (const auto& [k, v] : row.constants) {
        w.key(k);
        w.value(v);
    }
    w.end_object();
    if (!row.note.empty()) {
        w.key("note");
        w.value(row.note);
    }
    w.end_object();
}

inline std::string index_name(const std::string& base, int i) {
    return base + "_" + std::to_string(i);
}

inline std::string field_csv(const ScalarField& f, const std::string& name) {
    std::ostringstream os;
    write_csv(os, f, name);
    return os.str();
}

inline void dump_series_json(JsonWriter& w, const FCQSeries& s) {
    w.begin_object();
    w.key("schema");
    w.value(1);
    w.key("depth");
    w.value(s.depth());
    w.key("r");
    w.begin_array();
    for (double x : s.r().coeff) w.value(x);
    w.end_array();
    w.key("indices");
    w.begin_array();
    for (int i = 0; i >= -s.depth(); --i) {
        w.begin_object();
        w.key("i");
        w.value(i);
        auto arr = [&](const char* name, const ScalarField& f) {
            w.key(name);
            w.begin_array();
            for (double x : f.values()) w.value(x);
            w.end_array();
        };
        arr("gamma", s.gamma(i));
        arr("delta", s.delta(i));
        arr("alpha", s.alpha(i));
        arr("beta", s.beta(i));
        w.key("p");
        w.begin_array();
        for (int j = 0; j < s.frame().grid.n; ++j) {
            w.begin_array();
            for (int c = 0; c < 5; ++c) w.value(s.p(i).value(j)[c]);
            w.end_array();
        }
        w.end_array();
        w.end_object();
    }
    w.end_array();
    w.end_object();
}

}  // namespace run_detail

// Executes one pipeline: frame build, series extension when any series
// check asks for it, then every requested check. Returns the report, the
// output files as strings and the process exit code (0 pass, 1 failed
// verdict, 2 inconclusive, 3 reserved for config errors upstream).
inline RunOutput run(const RunConfig& cfg) {
    using run_detail::tol_of;
    const bool sampled = cfg.surface.profile.kind == ProfileKind::samples;

    std::set<std::string> checks(cfg.checks.begin(), cfg.checks.end());
    if (checks.empty()) {
        checks.insert(known_checks().begin(), known_checks().end());
        if (cfg.depth < 4) checks.erase("type3");
        if (cfg.depth < 3) checks.erase("type2");
        if (cfg.depth < 2) checks.erase("type1");
    }

    const int jet_order = std::max(2 * cfg.depth + 6, 12);
    auto frame = std::make_shared<const FrameBundle>(build_frame(cfg.surface, jet_order));

    const bool need_series =
        checks.count("conservation") || checks.count("parallelism") ||
        checks.count("consistency") || checks.count("pairing") || checks.count("type1") ||
        checks.count("type2") || checks.count("type3") || cfg.output.dump_series;
    std::optional<FCQSeries> series;
    if (need_series) series.emplace(extend(frame, cfg.r, cfg.depth));

    FrameInvariantReport inv = frame_invariants(*frame);
    StructureResiduals sr = structure_residuals(*frame);

    std::vector<CheckRow> rows;
    auto add_row = [&](CheckRow row) { rows.push_back(std::move(row)); };

    if (checks.count("frame")) {
        const double tol = tol_of(cfg, "frame", sampled);
        CheckRow row{"frame", false, false, std::max(inv.max_deviation, sr.max()), tol, {}, ""};
        row.verdict = row.residual < tol;
        row.constants = {{"invariants_max", inv.max_deviation},
                         {"structure_max", sr.max()},
                         {"frenet_drift", frame->frenet_drift}};
        add_row(row);
    }
    if (checks.count("conservation")) {
        const double tol = tol_of(cfg, "conservation", sampled);
        double worst = 0.0;
        for (const auto& r : conservation_residual(*series))
            worst = std::max({worst, r.deviation, r.offset});
        add_row({"conservation", worst < tol, false, worst, tol, {}, ""});
    }
    if (checks.count("parallelism")) {
        const double tol = tol_of(cfg, "parallelism", sampled);
        double worst = 0.0;
        for (const auto& r : parallelism_residual(*series))
            worst = std::max({worst, r.residual_u, r.residual_v});
        add_row({"parallelism", worst < tol, false, worst, tol, {}, ""});
    }
    if (checks.count("consistency")) {
        const double tol = tol_of(cfg, "consistency", sampled);
        double worst = 0.0;
        for (const auto& r : consistency_q_residual(*series)) worst = std::max(worst, r.residual);
        add_row({"consistency", worst < tol, false, worst, tol, {}, ""});
    }
    if (checks.count("pairing")) {
        const double tol = tol_of(cfg, "pairing", sampled);
        const int lo = -std::min(4, cfg.depth);
        double worst = 0.0;
        for (int i = 0; i >= lo; --i)
            for (int j = 0; j >= lo; --j)
                worst = std::max(worst, eta_pairing_identity(*series, i, j));
        add_row({"pairing", worst < tol, false, worst, tol, {}, ""});
    }
    const double dtol = tol_of(cfg, "detect", sampled);
    if (checks.count("cmc")) {
        CmcResult c = cmc_test(*frame, dtol);
        add_row({"cmc", c.verdict, c.inconclusive, c.residual, dtol, {{"H", c.H}},
                 c.inconclusive ? "inconclusive: k is identically zero" : ""});
    }
    if (checks.count("musso_nicolodi")) {
        MnResult m = musso_nicolodi_test(*frame, dtol);
        add_row({"musso_nicolodi", m.verdict, false, m.deviation, dtol, {{"value", m.value}}, ""});
    }
    for (int d = 1; d <= 3; ++d) {
        const std::string name = "type" + std::to_string(d);
        if (!checks.count(name)) continue;
        RatioTestResult rt = type_d_ratio_test(*series, d, dtol);
        CheckRow ratio_row{name + "_ratio", rt.verdict, rt.inconclusive,
                           std::max(rt.ratio_deviation, rt.shifted_residual), dtol,
                           {{"shift", rt.shift}}, rt.note};
        if (rt.have_form) {
            ratio_row.note = std::string(to_string(rt.form.kind)) +
                             (rt.note.empty() ? "" : "; " + rt.note);
            ratio_row.constants.push_back({"curvature", rt.form.curvature});
        }
        add_row(ratio_row);
        NormTestResult nt = type_d_norm_test(*series, d, dtol);
        add_row({name + "_norm", nt.verdict, false,
                 nt.has_adjacent ? std::min(nt.dev_self, nt.dev_adjacent) : nt.dev_self, dtol,
                 {{"value_self", nt.val_self}}, ""});
        LocationResult loc = constant_term_location(*series, d, dtol);
        CheckRow loc_row{name + "_location", loc.verdict, loc.inconclusive,
                         std::max({loc.vector_deviation, loc.comp[0], loc.comp[1]}), dtol,
                         {{"shift", loc.shift},
                          {"norm2", loc.norm2},
                          {"complement_0", loc.comp[0]},
                          {"complement_1", loc.comp[1]}},
                         loc.note};
        if (loc.have_form) {
            loc_row.note = std::string(to_string(loc.form.kind)) +
                           (frame->kind == SurfaceKind::cylinder && loc.ev_inf
                                ? std::string("; E(v_inf) member")
                                : std::string("")) +
                           (loc.note.empty() ? "" : "; " + loc.note);
        }
        add_row(loc_row);
    }
    if (checks.count("type2_conformal")) {
        Type2ConformalResult t = type2_conformal_test(*frame, dtol);
        add_row({"type2_conformal", t.verdict, false, t.residual, dtol,
                 {{"s1", t.s1}, {"s2", t.s2}}, ""});
    }
    if (checks.count("profile_ode")) {
        for (const auto& r : profile_ode_tests(*frame, dtol))
            add_row({r.name, r.verdict, false, r.residual, dtol, r.constants,
                     r.degenerate ? "degenerate fit: minimum-norm constants" : ""});
    }

    int fails = 0, inconclusives = 0, passes = 0;
    for (const auto& row : rows) {
        if (row.inconclusive)
            ++inconclusives;
        else if (row.verdict)
            ++passes;
        else
            ++fails;
    }
    const int exit_code = fails > 0 ? 1 : (inconclusives > 0 ? 2 : 0);

    JsonWriter w;
    w.begin_object();
    w.key("schema");
    w.value(1);
    w.key("surface");
    w.begin_object();
    w.key("kind");
    w.value(to_string(cfg.surface.kind));
    w.key("C");
    if (cfg.surface.kind == SurfaceKind::cylinder)
        w.null_value();
    else
        w.value(cfg.surface.C);
    w.key("profile_kind");
    switch (cfg.surface.profile.kind) {
        case ProfileKind::constant: w.value("constant"); break;
        case ProfileKind::formula: w.value("formula"); break;
        case ProfileKind::elastic: w.value("elastic"); break;
        case ProfileKind::samples: w.value("samples"); break;
    }
    w.end_object();
    w.key("grid");
    w.begin_object();
    w.key("n");
    w.value(cfg.surface.grid.n);
    w.key("u_min");
    w.value(cfg.surface.grid.u_min);
    w.key("u_max");
    w.value(cfg.surface.grid.u_max);
    w.key("periodic");
    w.value(cfg.surface.grid.periodic);
    w.end_object();
    w.key("depth");
    w.value(cfg.depth);
    w.key("r");
    w.begin_array();
    for (double x : cfg.r.coeff) w.value(x);
    w.end_array();

    w.key("frame");
    w.begin_object();
    w.key("frenet_drift");
    w.value(frame->frenet_drift);
    w.key("invariants_max");
    w.value(inv.max_deviation);
    w.key("structure");
    w.begin_object();
    w.key("psi_zz");
    w.value(sr.psi_zz);
    w.key("psi_zzbar");
    w.value(sr.psi_zzbar);
    w.key("psi_hat_u");
    w.value(sr.psi_hat_u);
    w.key("psi_hat_v");
    w.value(sr.psi_hat_v);
    w.key("gauss");
    w.value(sr.gauss);
    w.end_object();
    w.end_object();

    w.key("series");
    w.begin_object();
    w.key("built");
    w.value(need_series);
    if (need_series) {
        w.key("conservation");
        w.begin_array();
        for (const auto& r : conservation_residual(*series)) {
            w.begin_object();
            w.key("m");
            w.value(r.m);
            w.key("value");
            w.value(r.value);
            w.key("deviation");
            w.value(r.deviation);
            w.key("offset");
            w.value(r.offset);
            w.end_object();
        }
        w.end_array();
        w.key("parallelism");
        w.begin_array();
        for (const auto& r : parallelism_residual(*series)) {
            w.begin_object();
            w.key("i");
            w.value(r.i);
            w.key("residual_u");
            w.value(r.residual_u);
            w.key("residual_v");
            w.value(r.residual_v);
            w.end_object();
        }
        w.end_array();
    }
    w.end_object();

    w.key("checks");
    w.begin_array();
    for (const auto& row : rows) run_detail::emit_check(w, row);
    w.end_array();

    w.key("summary");
    w.begin_object();
    w.key("pass");
    w.value(passes);
    w.key("fail");
    w.value(fails);
    w.key("inconclusive");
    w.value(inconclusives);
    w.key("exit_code");
    w.value(exit_code);
    w.end_object();
    w.end_object();

    RunOutput out;
    out.exit_code = exit_code;
    out.report = w.str();
    out.files["report.json"] = out.report;

    if (series) {
        for (int i = 0; i >= -series->depth(); --i) {
            out.files["fields/" + run_detail::index_name("gamma", i) + ".csv"] =
                run_detail::field_csv(series->gamma(i), "value");
            out.files["fields/" + run_detail::index_name("delta", i) + ".csv"] =
                run_detail::field_csv(series->delta(i), "value");
        }
        for (const std::string& grp : cfg.output.fields) {
            if (grp == "alpha" || grp == "beta") {
                for (int i = 0; i >= -series->depth(); --i)
                    out.files["fields/" + run_detail::index_name(grp, i) + ".csv"] =
                        run_detail::field_csv(grp == "alpha" ? series->alpha(i) : series->beta(i),
                                              "value");
            } else if (grp == "c") {
                out.files["fields/c.csv"] = run_detail::field_csv(frame->c, "value");
            } else if (grp == "k") {
                out.files["fields/k.csv"] = run_detail::field_csv(frame->k, "value");
            } else if (grp == "bold_k") {
                out.files["fields/bold_k.csv"] = run_detail::field_csv(frame->bold_k, "k");
            } else {
                throw ConfigError("output: unknown field group '" + grp + "'");
            }
        }
        if (cfg.output.dump_series) {
            JsonWriter sw;
            run_detail::dump_series_json(sw, *series);
            out.files["series.json"] = sw.str();
        }
    } else {
        for (const std::string& grp : cfg.output.fields) {
            if (grp == "c")
                out.files["fields/c.csv"] = run_detail::field_csv(frame->c, "value");
            else if (grp == "k")
                out.files["fields/k.csv"] = run_detail::field_csv(frame->k, "value");
            else if (grp == "bold_k")
                out.files["fields/bold_k.csv"] = run_detail::field_csv(frame->bold_k, "k");
        }
    }
    return out;
}

inline void write_outputs(const RunOutput& out, const std::filesystem::path& dir) {
    for (const auto& [rel, content] : out.files) {
        const std::filesystem::path p = dir / rel;
        std::filesystem::create_directories(p.parent_path());
        std::ofstream f(p, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write output file: " + p.string());
        f << content;
    }
}

}  // namespace isoq
