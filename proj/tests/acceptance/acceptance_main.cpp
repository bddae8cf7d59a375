// Acceptance checks. Prints one [PASS]/[FAIL] line per criterion and exits
// nonzero if any fails. Tolerances are fixed here, not read from configs.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "imcmc/exact_oracle.hpp"
#include "imcmc/experiments.hpp"
#include "imcmc/it_sampler.hpp"
#include "imcmc/rng.hpp"
#include "imcmc/suite.hpp"
#include "test_support.hpp"

using namespace imcmc;
namespace fs = std::filesystem;

namespace {

constexpr double kIdentityTol = 1e-10;
constexpr double kNegativityTol = 1e-12;
constexpr double kCltBand = 0.15;
constexpr double kInertBand = 0.10;
constexpr double kLlnBand = 0.10;
constexpr double kSlopeK1 = -0.9;
constexpr double kSlopeK2 = -1.7;
constexpr double kIdentitySeconds = 10.0;
constexpr double kBoundsSeconds = 60.0;
constexpr double kCltSeconds = 600.0;
constexpr double kLlnSeconds = 300.0;
constexpr double kVstatSeconds = 300.0;

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// Exact identities on one instance at a random theta.
double identity_worst(const FiniteTarget& t, const FiniteKernel& p, double eps, const FiniteMeasure& theta,
                      const FiniteFunction& f, double& most_negative_f) {
    double worst = 0.0;
    const FiniteMeasure ts = theta_star(t);
    const FiniteKernel k_theta = build_ptheta_finite(p, theta, t, eps);
    const FiniteKernel k_star = build_ptheta_finite(p, ts, t, eps);

    // (f) pi P* = pi
    worst = std::max(worst, stationarity_residual(k_star, t.pi().weights()));
    // (a) Poisson residual and centering under both kernels
    for (const FiniteKernel* k : {&k_theta, &k_star}) {
        const FiniteMeasure pi = stationary_distribution(*k);
        const PoissonSolution sol = poisson_solve(*k, pi, f);
        worst = std::max({worst, sol.residual, sol.centering});
        // (e) F_theta >= 0
        most_negative_f = std::min(most_negative_f, variance_functional(*k, sol.g).values().minCoeff());
    }
    // (b) one-term identity and two-term decomposition
    const LinearizationResult lin = linearization_residual(theta, t, p, eps, f);
    worst = std::max(worst, lin.residual);
    // (c) theta(G_f) identity and (d) centering of G_f
    const FiniteFunction g = fluctuation_function_gf(t, p, eps, f);
    worst = std::max(worst, std::abs(lin.first_order - theta.integrate(g)));
    worst = std::max(worst, std::abs(ts.integrate(g)));
    return worst;
}

Outcome criterion_identities() {
    const auto t0 = Clock::now();
    std::mt19937_64 gen(20240601);
    double worst = 0.0, most_negative = 0.0;
    int instances = 0;

    const ITConfig ref = fixtures::reference_config();
    for (int i = 0; i < 10; ++i) {
        worst = std::max(worst, identity_worst(ref.target, ref.base_kernel, ref.epsilon,
                                               fixtures::random_measure(5, gen), fixtures::reference_f(),
                                               most_negative));
    }
    ++instances;
    for (int i = 0; i < 100; ++i) {
        const auto inst = fixtures::random_instance(gen, 50);
        const std::size_t n = inst.target.n_states();
        std::normal_distribution<double> nd;
        Eigen::VectorXd fv(n);
        for (auto& v : fv) v = nd(gen);
        worst = std::max(worst, identity_worst(inst.target, inst.base, inst.epsilon, fixtures::random_measure(n, gen),
                                               FiniteFunction(fv), most_negative));
        ++instances;
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = worst <= kIdentityTol && most_negative >= -kNegativityTol && secs < kIdentitySeconds;
    o.detail = std::to_string(instances) + " instances, worst identity error " + fmt("%.3g", worst) +
               ", min F " + fmt("%.3g", most_negative) + ", " + fmt("%.1f", secs) + " s";
    return o;
}

Outcome criterion_bounds() {
    const auto t0 = Clock::now();
    const ITConfig ref = fixtures::reference_config();
    std::mt19937_64 gen(7);
    std::size_t violations = 0, checks = 0;
    double min_margin = std::numeric_limits<double>::infinity();
    std::string first_violation;

    for (int i = 0; i < 100; ++i) {
        const FiniteMeasure a = fixtures::random_measure(5, gen);
        // Alternate between nearby and unrelated pairs.
        const FiniteMeasure other = fixtures::random_measure(5, gen);
        const double mix = i % 2 == 0 ? 0.05 : 1.0;
        const FiniteMeasure b((1 - mix) * a.weights() + mix * other.weights());
        const auto rep = check_perturbation_bounds(a, b, ref.target, ref.base_kernel, ref.epsilon, 0.25);
        for (const auto& c : rep.checks) {
            ++checks;
            min_margin = std::min(min_margin, c.margin() / std::max(c.rhs, 1e-300));
            if (!c.holds) {
                ++violations;
                if (first_violation.empty()) first_violation = c.name;
            }
        }
    }

    // Consecutive empirical kernels along simulated auxiliary paths.
    const FiniteFunction va = drift_function(ref.target).pow(0.25);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto cfg = fixtures::reference_config(2000, seed);
        const Trajectory tr = run_it_chain(cfg);
        EmpiricalMeasure th(5);
        th.append(static_cast<std::size_t>(tr.y[0]));
        const PthetaBuilder builder(ref.base_kernel, ref.target, ref.epsilon);
        Eigen::MatrixXd prev, cur;
        Eigen::VectorXd w;
        th.normalized_into(w);
        builder.build(w, prev);
        for (std::size_t k = 1; k < tr.y.size(); ++k) {
            const double before = th.evaluate(va);
            const auto y = static_cast<std::size_t>(tr.y[k]);
            th.append(y);
            th.normalized_into(w);
            builder.build(w, cur);
            const double n = static_cast<double>(th.count());
            const double lhs = v_operator_norm(cur - prev, va);
            const double rhs = 2.0 / n * before + 2.0 / n * va[y];
            ++checks;
            if (lhs > rhs * (1 + 1e-12) + 1e-14) {
                ++violations;
                if (first_violation.empty()) first_violation = "consecutive_kernel_distance";
            }
            std::swap(prev, cur);
        }
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = violations == 0 && secs < kBoundsSeconds;
    o.detail = std::to_string(checks) + " inequalities, " + std::to_string(violations) + " violations" +
               (first_violation.empty() ? "" : " (first: " + first_violation + ")") + ", min relative margin " +
               fmt("%.3g", min_margin) + ", " + fmt("%.1f", secs) + " s";
    return o;
}

struct SuiteRun {
    std::map<std::string, ExperimentResult> results;
    std::map<std::string, double> seconds;
    ExperimentSuite suite;
};

bool within(double ratio, double band) { return std::abs(ratio - 1.0) <= band; }

Outcome clt_outcome(const ExperimentResult& r, double band, double secs, double limit) {
    Outcome o;
    const CLTReport& c = *r.clt;
    o.pass = within(c.variance_ratio, band) && c.ks_distance < c.ks_critical && secs < limit;
    o.detail = r.name + " ratio " + fmt("%.4f", c.variance_ratio) + " (predicted " +
               fmt("%.6g", c.predicted_variance) + "), KS " + fmt("%.4f", c.ks_distance) + " < " +
               fmt("%.4f", c.ks_critical);
    return o;
}

Outcome criterion_total_clt(const SuiteRun& run) {
    const auto& r = run.results.at("total_clt");
    Outcome o = clt_outcome(r, kCltBand, run.seconds.at("total_clt"), kCltSeconds);
    o.pass = o.pass && r.clt->n_steps == 20000 && r.clt->n_replications == 1000;
    o.detail += ", " + fmt("%.1f", run.seconds.at("total_clt")) + " s";
    return o;
}

Outcome criterion_split(const SuiteRun& run) {
    const auto& m = run.results.at("martingale_clt");
    const auto& p = run.results.at("pi_fluctuation");
    const auto& t = run.results.at("total_clt");
    const double secs = run.seconds.at("martingale_clt") + run.seconds.at("pi_fluctuation");
    const Outcome om = clt_outcome(m, kCltBand, secs, kCltSeconds);
    const Outcome op = clt_outcome(p, kCltBand, secs, kCltSeconds);
    const bool additive = m.clt->predicted_variance + p.clt->predicted_variance == t.clt->predicted_variance;
    Outcome o;
    o.pass = om.pass && op.pass && additive;
    o.detail = om.detail + "; " + op.detail + "; predictions additive: " + (additive ? "exact" : "no");
    return o;
}

Outcome criterion_lln(const SuiteRun& run) {
    const auto& r = run.results.at("weak_lln");
    const auto& s = r.series.at(0);
    Outcome o;
    const double dev = std::abs(s.values.back() - s.reference) / s.reference;
    o.pass = s.n.back() == 1e5 && dev <= kLlnBand && run.seconds.at("weak_lln") < kLlnSeconds;
    o.detail = "average " + fmt("%.6g", s.values.back()) + " vs sigma^2 " + fmt("%.6g", s.reference) +
               " at n = 1e5 (relative deviation " + fmt("%.4f", dev) + ")";
    return o;
}

Outcome criterion_vstat(const SuiteRun& run) {
    const double k1 = run.results.at("vstat_k1").series.at(0).fitted_slope;
    const double k2 = run.results.at("vstat_k2").series.at(0).fitted_slope;
    const double secs = run.seconds.at("vstat_k1") + run.seconds.at("vstat_k2");
    Outcome o;
    o.pass = k1 <= kSlopeK1 && k2 <= kSlopeK2 && secs < kVstatSeconds;
    o.detail = "slope k=1 " + fmt("%.3f", k1) + " (<= -0.9), k=2 " + fmt("%.3f", k2) + " (<= -1.7)";
    return o;
}

Outcome criterion_controls(const SuiteRun& run) {
    Outcome o;
    std::ostringstream d;

    // Inert interaction: the predicted variance is the plain Markov-chain one.
    const auto& inert = run.results.at("inert_interaction");
    const auto& spec = *std::find_if(run.suite.experiments.begin(), run.suite.experiments.end(),
                                     [](const ExperimentSpec& e) { return e.name == "inert_interaction"; });
    const double classical = markov_asymptotic_variance(spec.config.base_kernel, spec.f);
    const bool inert_ok = within(inert.clt->variance_ratio, kInertBand) &&
                          std::abs(inert.clt->predicted_variance - classical) <= 1e-12 * classical;
    d << "inert ratio " << fmt("%.4f", inert.clt->variance_ratio) << (inert_ok ? " ok" : " FAIL");

    auto all_zero = [](const ExperimentResult& r) {
        for (double s : r.clt->per_replication_sums) {
            if (s != 0.0) return false;
        }
        return r.clt->degenerate && r.pass;
    };
    const bool constant_ok = all_zero(run.results.at("constant_f"));
    d << "; constant f sums zero" << (constant_ok ? " ok" : " FAIL");
    const bool pinned_ok = all_zero(run.results.at("pinned_theta_fluctuation"));
    d << "; pinned S2 zero" << (pinned_ok ? " ok" : " FAIL");

    auto pinned_cfg = spec.config;
    pinned_cfg.epsilon = 0.3;
    pinned_cfg.auxiliary.kind = AuxiliaryMode::Kind::frozen;
    pinned_cfg.seed = 1;
    const std::vector<std::uint64_t> grid{100, 1000, 10000};
    const auto diag = assumption_diagnostics(pinned_cfg, spec.f, grid);
    bool diag_ok = true;
    for (double v : diag.at(0).values) diag_ok = diag_ok && v == 0.0;
    d << "; pinned regularity series zero" << (diag_ok ? " ok" : " FAIL");

    const auto& pm = run.results.at("pinned_theta_martingale");
    const bool pm_ok = within(pm.clt->variance_ratio, kInertBand) && pm.clt->ks_distance < pm.clt->ks_critical;
    d << "; pinned martingale ratio " << fmt("%.4f", pm.clt->variance_ratio) << (pm_ok ? " ok" : " FAIL");

    o.pass = inert_ok && constant_ok && pinned_ok && diag_ok && pm_ok;
    o.detail = d.str();
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome criterion_determinism(const SuiteRun& run, const fs::path& out_dir) {
    Outcome o;
    // Second run through the full orchestrator, with a different thread count.
    ExperimentSuite suite = run.suite;
    suite.output_dir = (out_dir / "suite_run").string();
    std::ostringstream log;
    const int code = run_suite(suite, {2, &log});
    int identical = 0, compared = 0;
    for (const auto& [name, result] : run.results) {
        ++compared;
        if (slurp(fs::path(suite.output_dir) / (name + ".sums.csv")) == sums_csv(result)) ++identical;
    }

    bool golden = true;
    std::ifstream in(std::string(IMCMC_TEST_DATA_DIR) + "/rng_golden_0_0.txt");
    RngStream s = derive_stream(0, 0);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        golden = golden && s.next_u64() == std::stoull(line, nullptr, 16);
        ++lines;
    }
    golden = golden && lines == 16;

    o.pass = code == 0 && identical == compared && golden;
    o.detail = std::to_string(identical) + "/" + std::to_string(compared) + " CSV files byte-identical, suite exit " +
               std::to_string(code) + ", golden RNG " + (golden ? "ok" : "MISMATCH");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    fs::path out_dir = "acceptance_out";
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--out" && i + 1 < argc) {
            out_dir = argv[++i];
        } else {
            std::cerr << "usage: imcmc_acceptance [--out DIR]\n";
            return 2;
        }
    }
    fs::create_directories(out_dir);

    bool all = true;
    auto report = [&](int id, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        all = all && o.pass;
        std::cout << (o.pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << o.detail << std::endl;
    };

    report(1, criterion_identities);
    report(2, criterion_bounds);

    SuiteRun run;
    std::string load_error;
    try {
        run.suite = load_suite(std::string(IMCMC_CONFIG_DIR) + "/reference_suite.json");
        const int threads = resolve_threads();
        for (const auto& spec : run.suite.experiments) {
            const auto t0 = Clock::now();
            run.results.emplace(spec.name, run_experiment(spec, run.suite.master_seed, threads));
            run.seconds[spec.name] = seconds_since(t0);
        }
    } catch (const std::exception& e) {
        load_error = e.what();
    }
    auto suite_criterion = [&](int id, const std::function<Outcome()>& fn) {
        if (!load_error.empty()) {
            report(id, [&]() -> Outcome { return {false, "reference suite failed: " + load_error}; });
        } else {
            report(id, fn);
        }
    };
    suite_criterion(3, [&] { return criterion_total_clt(run); });
    suite_criterion(4, [&] { return criterion_split(run); });
    suite_criterion(5, [&] { return criterion_lln(run); });
    suite_criterion(6, [&] { return criterion_vstat(run); });
    suite_criterion(7, [&] { return criterion_controls(run); });
    suite_criterion(8, [&] { return criterion_determinism(run, out_dir); });

    return all ? 0 : 1;
}
