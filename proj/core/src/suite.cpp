#include "imcmc/suite.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "imcmc/exact_oracle.hpp"
#include "imcmc/numeric.hpp"
#include "json_detail.hpp"

namespace imcmc {

using detail::json;

namespace {

struct KindEntry {
    ExperimentKind kind;
    const char* name;
};

constexpr KindEntry kKinds[] = {
    {ExperimentKind::clt, "clt"},
    {ExperimentKind::martingale_clt, "martingale_clt"},
    {ExperimentKind::pi_fluctuation, "pi_fluctuation"},
    {ExperimentKind::lln, "lln"},
    {ExperimentKind::diagnostics, "diagnostics"},
    {ExperimentKind::vstat, "vstat"},
};

bool is_clt_kind(ExperimentKind k) {
    return k == ExperimentKind::clt || k == ExperimentKind::martingale_clt || k == ExperimentKind::pi_fluctuation;
}

FiniteFunction read_function(const json& j, std::size_t n, const std::string& path) {
    if (!j.is_object()) throw ValidationError(path, "expected {\"indicator\"|\"constant\"|\"values\": ...}");
    if (j.contains("indicator")) {
        const std::uint64_t s = detail::get_u64(j, "indicator", path);
        if (s >= n) throw ValidationError(path + ".indicator", "state out of range");
        return FiniteFunction::indicator(n, s);
    }
    if (j.contains("constant")) return FiniteFunction::constant(n, detail::get_double(j, "constant", path));
    if (j.contains("values")) {
        const std::vector<double> v = detail::get_doubles(j.at("values"), path + ".values");
        if (v.size() != n) throw ValidationError(path + ".values", "length differs from the state space");
        return FiniteFunction(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    throw ValidationError(path, "expected one of indicator, constant, values");
}

std::vector<std::uint64_t> read_grid(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ValidationError(path, "expected a nonempty array of integers");
    std::vector<std::uint64_t> out;
    for (const auto& v : j) {
        if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) {
            throw ValidationError(path, "entries must be positive integers");
        }
        if (!out.empty() && v.get<std::uint64_t>() <= out.back()) {
            throw ValidationError(path, "must be strictly increasing");
        }
        out.push_back(v.get<std::uint64_t>());
    }
    return out;
}

ExperimentSpec read_spec(const json& j, const std::string& path) {
    ExperimentSpec s;
    const json& name = detail::require(j, "name", path);
    if (!name.is_string() || name.get<std::string>().empty()) {
        throw ValidationError(path + ".name", "expected a nonempty string");
    }
    s.name = name.get<std::string>();
    for (char c : s.name) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) {
            throw ValidationError(path + ".name", "use letters, digits, '_', '-' or '.'");
        }
    }
    const std::string kind = j.value("kind", std::string("clt"));
    bool found = false;
    for (const auto& e : kKinds) {
        if (kind == e.name) {
            s.kind = e.kind;
            found = true;
        }
    }
    if (!found) throw ValidationError(path + ".kind", "unknown experiment kind '" + kind + "'");

    bool seed_present = false;
    s.config = detail::read_config(detail::require(j, "config", path), path + ".config", &seed_present);
    if (seed_present) s.seed = s.config.seed;
    s.config.seed = 0;
    s.f = read_function(detail::require(j, "f", path), s.config.target.n_states(), path + ".f");

    if (j.contains("replications")) s.replications = detail::get_u64(j, "replications", path);
    if (const auto t = j.find("tolerances"); t != j.end()) {
        if (t->contains("variance_band")) s.tolerances.variance_band = detail::get_double(*t, "variance_band", path + ".tolerances");
        if (t->contains("ks_coefficient")) s.tolerances.ks_coefficient = detail::get_double(*t, "ks_coefficient", path + ".tolerances");
        if (!(s.tolerances.variance_band > 0.0)) throw ValidationError(path + ".tolerances.variance_band", "must be > 0");
        if (!(s.tolerances.ks_coefficient > 0.0)) throw ValidationError(path + ".tolerances.ks_coefficient", "must be > 0");
    }
    if (j.contains("n_grid")) s.n_grid = read_grid(j.at("n_grid"), path + ".n_grid");
    if (j.contains("seeds")) s.seeds = detail::get_u64(j, "seeds", path);
    if (j.contains("relative_tolerance")) s.relative_tolerance = detail::get_double(j, "relative_tolerance", path);
    if (j.contains("alpha")) s.alpha = detail::get_double(j, "alpha", path);
    if (j.contains("l_refresh")) s.l_refresh = detail::get_u64(j, "l_refresh", path);
    if (j.contains("k_order")) s.k_order = static_cast<int>(detail::get_u64(j, "k_order", path));
    if (j.contains("max_slope")) s.max_slope = detail::get_double(j, "max_slope", path);

    if (is_clt_kind(s.kind) && s.replications < 100) throw ValidationError(path + ".replications", "must be >= 100");
    if (s.kind == ExperimentKind::vstat && s.replications < 2) throw ValidationError(path + ".replications", "must be >= 2");
    if ((s.kind == ExperimentKind::lln || s.kind == ExperimentKind::diagnostics || s.kind == ExperimentKind::vstat) &&
        s.n_grid.empty()) {
        throw ValidationError(path + ".n_grid", "required for this kind");
    }
    if (s.seeds < 1) throw ValidationError(path + ".seeds", "must be >= 1");
    if (!(s.relative_tolerance > 0.0)) throw ValidationError(path + ".relative_tolerance", "must be > 0");
    if (!(s.alpha > 0.0 && s.alpha <= 1.0)) throw ValidationError(path + ".alpha", "must lie in (0, 1]");
    if (s.l_refresh < 1) throw ValidationError(path + ".l_refresh", "must be >= 1");
    if (s.k_order != 1 && s.k_order != 2) throw ValidationError(path + ".k_order", "must be 1 or 2");
    if (s.kind == ExperimentKind::vstat && s.config.auxiliary.kind == AuxiliaryMode::Kind::frozen) {
        throw ValidationError(path + ".config.auxiliary.mode", "vstat needs an iid or markov auxiliary process");
    }
    return s;
}

json spec_json(const ExperimentSpec& s) {
    json j{{"name", s.name}, {"kind", kind_name(s.kind)}};
    json cfg = detail::config_json(s.config, false);
    if (s.seed) cfg["seed"] = *s.seed;
    j["config"] = std::move(cfg);
    j["f"] = json{{"values", std::vector<double>(s.f.values().data(), s.f.values().data() + s.f.size())}};
    j["replications"] = s.replications;
    j["tolerances"] = json{{"variance_band", s.tolerances.variance_band}, {"ks_coefficient", s.tolerances.ks_coefficient}};
    if (!s.n_grid.empty()) j["n_grid"] = s.n_grid;
    j["seeds"] = s.seeds;
    j["relative_tolerance"] = s.relative_tolerance;
    j["alpha"] = s.alpha;
    j["l_refresh"] = s.l_refresh;
    j["k_order"] = s.k_order;
    if (s.max_slope) j["max_slope"] = *s.max_slope;
    return j;
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json series_json(const DiagnosticSeries& s) {
    json values = json::array();
    for (double v : s.values) values.push_back(number(v));
    return json{{"label", s.label},
                {"n", s.n},
                {"values", std::move(values)},
                {"fitted_slope", number(s.fitted_slope)},
                {"reference", number(s.reference)}};
}

std::string fmt_short(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

bool all_zero(const std::vector<double>& v) {
    for (double x : v) {
        if (x != 0.0) return false;
    }
    return true;
}

}  // namespace

const char* kind_name(ExperimentKind k) {
    for (const auto& e : kKinds) {
        if (e.kind == k) return e.name;
    }
    return "clt";
}

bool operator==(const ExperimentSpec& a, const ExperimentSpec& b) {
    return a.name == b.name && a.kind == b.kind && a.config == b.config && a.seed == b.seed && a.f == b.f &&
           a.replications == b.replications && a.tolerances.variance_band == b.tolerances.variance_band &&
           a.tolerances.ks_coefficient == b.tolerances.ks_coefficient && a.n_grid == b.n_grid &&
           a.seeds == b.seeds && a.relative_tolerance == b.relative_tolerance && a.alpha == b.alpha &&
           a.l_refresh == b.l_refresh && a.k_order == b.k_order && a.max_slope == b.max_slope;
}

// -------------------------------------------------------------------- load

ExperimentSuite parse_suite(const std::string& text, std::ostream* log, const std::string& source) {
    const json j = detail::parse_json(text, source);
    if (!j.is_object()) throw ValidationError(source, "expected a JSON object");
    ExperimentSuite suite;
    if (j.contains("master_seed")) {
        suite.master_seed = detail::get_u64(j, "master_seed", "");
    } else if (log != nullptr) {
        *log << "warning: " << source << ": master_seed missing; using 0\n";
    }
    if (j.contains("output_dir")) {
        if (!j.at("output_dir").is_string()) throw ValidationError("output_dir", "expected a string");
        suite.output_dir = j.at("output_dir").get<std::string>();
    }
    if (j.contains("experiments")) {
        const json& list = j.at("experiments");
        if (!list.is_array()) throw ValidationError("experiments", "expected an array");
        std::set<std::string> names;
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string path = "experiments[" + std::to_string(i) + "]";
            ExperimentSpec s = read_spec(list[i], path);
            if (!names.insert(s.name).second) throw ValidationError(path + ".name", "duplicate name '" + s.name + "'");
            suite.experiments.push_back(std::move(s));
        }
    }
    return suite;
}

ExperimentSuite load_suite(const std::string& path, std::ostream* log) {
    std::ifstream in(path);
    if (!in) throw ValidationError(path, "cannot open file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_suite(buf.str(), log, path);
}

std::string suite_to_json(const ExperimentSuite& suite) {
    json list = json::array();
    for (const auto& s : suite.experiments) list.push_back(spec_json(s));
    const json j{{"master_seed", suite.master_seed}, {"output_dir", suite.output_dir}, {"experiments", std::move(list)}};
    return j.dump(2);
}

// --------------------------------------------------------------------- run

ExperimentResult run_experiment(const ExperimentSpec& spec, std::uint64_t master_seed, int threads) {
    ITConfig cfg = spec.config;
    cfg.seed = spec.effective_seed(master_seed);
    ExperimentResult r;
    r.name = spec.name;
    r.kind = spec.kind;

    switch (spec.kind) {
        case ExperimentKind::clt:
        case ExperimentKind::martingale_clt:
        case ExperimentKind::pi_fluctuation: {
            const ExperimentOptions opt{threads, spec.tolerances};
            r.oracle = total_asymptotic_variance(cfg, spec.f);
            if (spec.kind == ExperimentKind::clt) {
                r.clt = clt_experiment(cfg, spec.f, spec.replications, opt);
            } else if (spec.kind == ExperimentKind::martingale_clt) {
                r.clt = martingale_clt_experiment(cfg, spec.f, spec.replications, opt);
            } else {
                r.clt = pi_fluctuation_experiment(cfg, spec.f, spec.replications, opt);
            }
            r.pass = r.clt->pass;
            r.summary = r.clt->degenerate
                            ? "degenerate (predicted 0, all sums 0)"
                            : "ratio " + fmt_short(r.clt->variance_ratio) + ", KS " + fmt_short(r.clt->ks_distance) +
                                  " < " + fmt_short(r.clt->ks_critical);
            break;
        }
        case ExperimentKind::lln: {
            r.oracle.sigma_sq = sigma_sq(cfg.target, cfg.base_kernel, cfg.epsilon, spec.f);
            r.oracle.total = r.oracle.sigma_sq;
            DiagnosticSeries s = lln_experiment(cfg, spec.f, spec.n_grid, spec.seeds, threads);
            const double last = s.values.back();
            const double ref = s.reference;
            r.pass = ref == 0.0 ? last == 0.0 : std::abs(last - ref) <= spec.relative_tolerance * ref;
            r.summary = "average " + fmt_short(last) + " vs sigma^2 " + fmt_short(ref);
            r.series.push_back(std::move(s));
            break;
        }
        case ExperimentKind::diagnostics: {
            r.series = assumption_diagnostics(cfg, spec.f, spec.n_grid, spec.alpha, spec.l_refresh);
            r.pass = true;
            for (const auto& s : r.series) {
                const bool ok = all_zero(s.values) || s.fitted_slope < 0.0;
                r.pass = r.pass && ok;
                r.summary += s.label + " " + (all_zero(s.values) ? std::string("0") : fmt_short(s.fitted_slope)) + "; ";
            }
            break;
        }
        case ExperimentKind::vstat: {
            DiagnosticSeries s =
                vstat_moment_check(cfg, spec.f, spec.k_order, spec.n_grid, spec.replications, threads);
            const double bound = spec.max_slope.value_or(-spec.k_order + 0.3);
            r.pass = all_zero(s.values) || s.fitted_slope <= bound;
            r.summary = "slope " + fmt_short(s.fitted_slope) + " <= " + fmt_short(bound);
            r.series.push_back(std::move(s));
            break;
        }
    }
    return r;
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string report_json(const ExperimentResult& r, std::uint64_t seed) {
    json j{{"schema", "1"}, {"name", r.name}, {"kind", kind_name(r.kind)}, {"pass", r.pass}, {"seed", seed}};
    j["oracle"] = json{{"sigma_sq", number(r.oracle.sigma_sq)},
                       {"gamma_tilde_sq", number(r.oracle.gamma_tilde_sq)},
                       {"total", number(r.oracle.total)}};
    if (r.clt) {
        const CLTReport& c = *r.clt;
        j["clt"] = json{{"n_steps", c.n_steps},
                        {"n_replications", c.n_replications},
                        {"predicted_variance", number(c.predicted_variance)},
                        {"empirical_variance", number(c.empirical_variance)},
                        {"variance_ratio", number(c.variance_ratio)},
                        {"ks_distance", number(c.ks_distance)},
                        {"ks_critical", number(c.ks_critical)},
                        {"degenerate", c.degenerate},
                        {"pass", c.pass}};
    }
    if (!r.series.empty()) {
        json list = json::array();
        for (const auto& s : r.series) list.push_back(series_json(s));
        j["series"] = std::move(list);
    }
    return j.dump(2) + "\n";
}

std::string sums_csv(const ExperimentResult& r) {
    std::string out;
    if (r.clt) {
        out = "replication,sum\n";
        for (std::size_t i = 0; i < r.clt->per_replication_sums.size(); ++i) {
            out += std::to_string(i) + "," + format_double(r.clt->per_replication_sums[i]) + "\n";
        }
    } else {
        out = "series,n,value\n";
        for (const auto& s : r.series) {
            for (std::size_t i = 0; i < s.values.size(); ++i) {
                out += s.label + "," + format_double(s.n[i]) + "," + format_double(s.values[i]) + "\n";
            }
        }
    }
    return out;
}

int run_suite(const ExperimentSuite& suite, const SuiteRunOptions& opt) {
    std::ostream& os = opt.out != nullptr ? *opt.out : std::cout;
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(suite.output_dir, ec);
    if (ec) {
        os << "error: cannot create output directory " << suite.output_dir << ": " << ec.message() << "\n";
        return 2;
    }
    std::vector<ExperimentResult> results;
    for (const auto& spec : suite.experiments) {
        ExperimentResult r = run_experiment(spec, suite.master_seed, opt.threads);
        const fs::path base = fs::path(suite.output_dir) / spec.name;
        std::ofstream report(base.string() + ".report.json", std::ios::binary);
        std::ofstream sums(base.string() + ".sums.csv", std::ios::binary);
        report << report_json(r, spec.effective_seed(suite.master_seed));
        sums << sums_csv(r);
        if (!report || !sums) {
            os << "error: cannot write reports for " << spec.name << " under " << suite.output_dir << "\n";
            return 2;
        }
        results.push_back(std::move(r));
    }

    std::size_t failed = 0;
    os << "experiment                       kind             result  detail\n";
    for (const auto& r : results) {
        char line[256];
        std::snprintf(line, sizeof line, "%-32s %-16s %-7s ", r.name.c_str(), kind_name(r.kind),
                      r.pass ? "PASS" : "FAIL");
        os << line << r.summary << "\n";
        if (!r.pass) ++failed;
    }
    os << results.size() - failed << "/" << results.size() << " experiments passed\n";
    if (failed > 0) {
        os << "failed:";
        for (const auto& r : results) {
            if (!r.pass) os << " " << r.name;
        }
        os << "\n";
    }
    return failed == 0 ? 0 : 1;
}

// ------------------------------------------------------------------ oracle

std::string oracle_report_json(const ITConfig& cfg, const FiniteFunction& f, double alpha) {
    const FiniteITModel model(cfg);
    const VarianceReport v = total_asymptotic_variance(model, f);
    const FiniteMeasure star = model.theta_star();
    const FiniteMeasure mid(0.5 * (star.weights() + FiniteMeasure::uniform(model.n_states()).weights()));

    const FiniteKernel p_star = build_ptheta_finite(cfg.base_kernel, star, cfg.target, cfg.epsilon);
    const PoissonSolution sol = poisson_solve(p_star, stationary_distribution(p_star), f);
    const LinearizationResult lin = linearization_residual(mid, cfg.target, cfg.base_kernel, cfg.epsilon, f);
    const PerturbationReport bounds =
        check_perturbation_bounds(mid, star, cfg.target, cfg.base_kernel, cfg.epsilon, alpha);

    json b = json::array();
    for (const auto& c : bounds.checks) {
        b.push_back(json{{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"margin", c.margin()}, {"holds", c.holds}});
    }
    const json j{{"schema", "1"},
                 {"sigma_sq", v.sigma_sq},
                 {"gamma_tilde_sq", v.gamma_tilde_sq},
                 {"total", v.total},
                 {"residuals", json{{"poisson", std::max(sol.residual, sol.centering)}, {"linearization", lin.residual}}},
                 {"bounds", std::move(b)}};
    return j.dump(2) + "\n";
}

// --------------------------------------------------------------- trajectory

void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
    os << "step,x_state,y_state\n";
    os << 0 << "," << t.x0 << ",\n";
    for (std::size_t k = 0; k < t.x.size(); ++k) {
        os << k + 1 << "," << t.x[k] << ",";
        if (t.y[k] >= 0) os << t.y[k];
        os << "\n";
    }
}

void write_trajectory_csv(std::ostream& os, const ContinuousTrajectory& t) {
    const std::size_t d = t.dimension;
    os << "step";
    for (std::size_t i = 0; i < d; ++i) os << ",x_" << i;
    for (std::size_t i = 0; i < d; ++i) os << ",y_" << i;
    os << "\n";
    const std::size_t n = d == 0 ? 0 : t.x.size() / d;
    for (std::size_t k = 0; k < n; ++k) {
        os << k + 1;
        for (std::size_t i = 0; i < d; ++i) os << "," << format_double(t.x[k * d + i]);
        for (std::size_t i = 0; i < d; ++i) os << "," << format_double(t.y[k * d + i]);
        os << "\n";
    }
}

}  // namespace imcmc
