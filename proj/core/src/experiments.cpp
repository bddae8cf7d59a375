#include "imcmc/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "imcmc/errors.hpp"
#include "imcmc/numeric.hpp"
#include "imcmc/stats.hpp"
#include "imcmc/theta_functionals.hpp"

namespace imcmc {

// ----------------------------------------------------------------- threads

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("IMCMC_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min<long>(v, 1024));
    }
    return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// ------------------------------------------------------------------- grids

namespace {

void require_grid(std::span<const std::uint64_t> grid) {
    if (grid.empty()) throw ValidationError("n_grid", "must not be empty");
    if (grid.front() == 0) throw ValidationError("n_grid", "entries must be positive");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] <= grid[i - 1]) throw ValidationError("n_grid", "must be strictly increasing");
    }
}

std::vector<double> as_doubles(std::span<const std::uint64_t> grid) {
    return {grid.begin(), grid.end()};
}

// Mean over replications, per grid index, in a fixed summation order.
std::vector<double> column_means(const std::vector<std::vector<double>>& rows, std::size_t cols) {
    std::vector<double> out(cols);
    std::vector<double> col(rows.size());
    for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t r = 0; r < rows.size(); ++r) col[r] = rows[r][c];
        out[c] = stable_sum(col) / static_cast<double>(rows.size());
    }
    return out;
}

ITChainState auxiliary_only_state(const FiniteITModel& model, RngStream rng) {
    return ITChainState{0, EmpiricalMeasure(model.n_states()), 0, 0, std::move(rng)};
}

}  // namespace

// --------------------------------------------------------------------- CLT

CLTReport make_clt_report(std::vector<double> sums, double predicted, std::uint64_t n_steps,
                          const CLTTolerances& tol) {
    if (sums.size() < 2) throw PreconditionError("make_clt_report: need at least two replications");
    if (!(predicted >= 0.0)) throw DomainError("make_clt_report: predicted variance must be >= 0");
    CLTReport rep;
    rep.n_steps = n_steps;
    rep.n_replications = sums.size();
    rep.predicted_variance = predicted;
    rep.empirical_variance = sample_variance(sums);
    rep.ks_critical = ks_critical_value(sums.size(), tol.ks_coefficient);
    if (predicted == 0.0) {
        double max_abs = 0.0;
        for (double s : sums) max_abs = std::max(max_abs, std::abs(s));
        if (max_abs > 1e-9) {
            throw InconsistencyError("predicted variance is 0 but replication sums are nonzero (max |sum| = " +
                                     std::to_string(max_abs) + ")");
        }
        rep.degenerate = true;
        rep.variance_ratio = std::numeric_limits<double>::quiet_NaN();
        rep.ks_distance = std::numeric_limits<double>::quiet_NaN();
        rep.pass = true;
    } else {
        rep.variance_ratio = rep.empirical_variance / predicted;
        std::vector<double> z(sums.size());
        const double scale = 1.0 / std::sqrt(predicted);
        for (std::size_t i = 0; i < sums.size(); ++i) z[i] = sums[i] * scale;
        rep.ks_distance = ks_distance(z);
        rep.pass = std::abs(rep.variance_ratio - 1.0) <= tol.variance_band && rep.ks_distance < rep.ks_critical;
    }
    rep.per_replication_sums = std::move(sums);
    return rep;
}

DecomposedSums replicate_decomposed_sums(const FiniteITModel& model, const FiniteFunction& f,
                                         std::size_t n_replications, int threads) {
    if (f.size() != model.n_states()) throw ShapeError("replicate_decomposed_sums: f size mismatch");
    const std::uint64_t n = model.config().n_steps;
    const std::uint64_t seed = model.config().seed;
    const double pi_star = ThetaEvaluator(model, f).pi_f(model.theta_star().weights());
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));

    DecomposedSums out;
    out.total.resize(n_replications);
    out.martingale.resize(n_replications);
    out.fluctuation.resize(n_replications);
    parallel_for(n_replications, resolve_threads(threads), [&](std::size_t r) {
        ThetaEvaluator ev(model, f);
        ITChainState st = init_chain(model, derive_stream(seed, r));
        Eigen::VectorXd theta;
        CompensatedSum total, mart, fluc;
        for (std::uint64_t k = 0; k < n; ++k) {
            advance_auxiliary(st, model);
            current_theta(st, model, theta);
            const double pf = ev.pi_f(theta);
            it_step(st, model);
            ++st.step;
            const double fx = f[st.x];
            total.add(fx - pi_star);
            mart.add(fx - pf);
            fluc.add(pf - pi_star);
        }
        out.total[r] = total.value() * scale;
        out.martingale[r] = mart.value() * scale;
        out.fluctuation[r] = fluc.value() * scale;
    });
    return out;
}

namespace {

enum class SumKind { total, martingale, fluctuation };

CLTReport run_clt(const ITConfig& cfg, const FiniteFunction& f, std::size_t n_replications,
                  const ExperimentOptions& opt, SumKind kind) {
    if (n_replications < 100) throw PreconditionError("CLT experiments need at least 100 replications");
    const FiniteITModel model(cfg);
    const VarianceReport oracle = total_asymptotic_variance(model, f);
    DecomposedSums sums = replicate_decomposed_sums(model, f, n_replications, opt.threads);
    switch (kind) {
        case SumKind::total:
            return make_clt_report(std::move(sums.total), oracle.total, cfg.n_steps, opt.tolerances);
        case SumKind::martingale:
            return make_clt_report(std::move(sums.martingale), oracle.sigma_sq, cfg.n_steps, opt.tolerances);
        case SumKind::fluctuation:
            return make_clt_report(std::move(sums.fluctuation), kBrownianLogFactor * oracle.gamma_tilde_sq,
                                   cfg.n_steps, opt.tolerances);
    }
    throw InternalError("run_clt: unknown kind");
}

}  // namespace

CLTReport clt_experiment(const ITConfig& cfg, const FiniteFunction& f, std::size_t n_replications,
                         const ExperimentOptions& opt) {
    return run_clt(cfg, f, n_replications, opt, SumKind::total);
}

CLTReport martingale_clt_experiment(const ITConfig& cfg, const FiniteFunction& f, std::size_t n_replications,
                                    const ExperimentOptions& opt) {
    return run_clt(cfg, f, n_replications, opt, SumKind::martingale);
}

CLTReport pi_fluctuation_experiment(const ITConfig& cfg, const FiniteFunction& f, std::size_t n_replications,
                                    const ExperimentOptions& opt) {
    return run_clt(cfg, f, n_replications, opt, SumKind::fluctuation);
}

// ------------------------------------------------------------- diagnostics

void fit_series_slope(DiagnosticSeries& s) {
    std::vector<double> dev(s.values.size());
    for (std::size_t i = 0; i < dev.size(); ++i) dev[i] = s.values[i] - s.reference;
    s.fitted_slope = log_log_slope(s.n, dev);
}

DiagnosticSeries lln_experiment(const ITConfig& cfg, const FiniteFunction& f, std::span<const std::uint64_t> n_grid,
                                std::size_t n_seeds, int threads) {
    require_grid(n_grid);
    if (n_seeds < 1) throw ValidationError("seeds", "must be >= 1");
    const FiniteITModel model(cfg);
    if (f.size() != model.n_states()) throw ShapeError("lln_experiment: f size mismatch");
    const std::uint64_t n_max = n_grid.back();

    std::vector<std::vector<double>> rows(n_seeds, std::vector<double>(n_grid.size()));
    parallel_for(n_seeds, resolve_threads(threads), [&](std::size_t s) {
        ThetaEvaluator ev(model, f);
        ITChainState st = init_chain(model, derive_stream(cfg.seed, s));
        Eigen::VectorXd theta;
        CompensatedSum acc;
        std::size_t gi = 0;
        for (std::uint64_t j = 1; j <= n_max; ++j) {
            advance_auxiliary(st, model);
            current_theta(st, model, theta);
            ev.solve(theta);
            acc.add(ev.variance_function()[static_cast<Eigen::Index>(st.x)]);
            it_step(st, model);
            ++st.step;
            if (j == n_grid[gi]) rows[s][gi++] = acc.value() / static_cast<double>(j);
        }
    });

    DiagnosticSeries out;
    out.label = "variance_functional_average";
    out.n = as_doubles(n_grid);
    out.values = column_means(rows, n_grid.size());
    out.reference = sigma_sq(model.target(), model.base_kernel(), model.epsilon(), f);
    fit_series_slope(out);
    return out;
}

std::vector<DiagnosticSeries> assumption_diagnostics(const ITConfig& cfg, const FiniteFunction& f,
                                                     std::span<const std::uint64_t> n_grid, double alpha,
                                                     std::uint64_t l_refresh) {
    require_grid(n_grid);
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha", "must lie in (0, 1]");
    if (l_refresh < 1) throw ValidationError("l_refresh", "must be >= 1");
    const FiniteITModel model(cfg);
    if (f.size() != model.n_states()) throw ShapeError("assumption_diagnostics: f size mismatch");

    const FiniteFunction v = drift_function(model.target());
    const Eigen::VectorXd w = v.pow(alpha).values();

    // theta* quantities through the evaluator, so a pinned theta* gives D = 0 exactly.
    ThetaEvaluator star(model, f);
    star.solve(model.theta_star().weights());
    const Eigen::MatrixXd p_star = star.p();
    const Eigen::VectorXd lam_f_star = star.g();
    const Eigen::VectorXd pi_star = star.pi();
    PoissonWorkspace ws;
    Eigen::VectorXd lam_w;

    ThetaEvaluator ev(model, f);
    ITChainState st = init_chain(model, derive_stream(cfg.seed, 0));
    Eigen::VectorXd theta, prev_pg, d_lam_f;
    Eigen::MatrixXd d;
    CompensatedSum regularity, containment, remainder;
    double l_power = 0.0;
    const double l_exponent = 2.0 / alpha;
    const std::uint64_t n_max = n_grid.back();

    DiagnosticSeries a{"poisson_regularity", as_doubles(n_grid), std::vector<double>(n_grid.size()), 0.0, 0.0};
    DiagnosticSeries b{"containment", as_doubles(n_grid), std::vector<double>(n_grid.size()), 0.0, 0.0};
    DiagnosticSeries c{"linearization_remainder", as_doubles(n_grid), std::vector<double>(n_grid.size()), 0.0, 0.0};
    std::size_t gi_b = 0, gi_ac = 0;

    // Iteration j appends Y_j; the current theta drives X_{j-1} -> X_j and is
    // the (j-1)-th parameter of the partial sums.
    for (std::uint64_t j = 1; j <= n_max + 1; ++j) {
        advance_auxiliary(st, model);
        current_theta(st, model, theta);
        ev.solve(theta);
        const auto x = static_cast<Eigen::Index>(st.x);

        if (j <= n_max) {
            if ((j - 1) % l_refresh == 0) {
                const FiniteKernel k(ev.p(), 1e-10);
                const double l = fit_ergodicity_constants(k, FiniteMeasure(ev.pi()), v, alpha, 200).l;
                l_power = std::pow(l, l_exponent);
            }
            containment.add(l_power * ev.p().row(x).dot(v.values()));
            if (j == n_grid[gi_b]) {
                b.values[gi_b++] = containment.value() * std::pow(static_cast<double>(j), -1.0 / (2.0 * alpha));
            }
        }
        if (j >= 2) {
            double diff = 0.0;
            for (Eigen::Index y = 0; y < w.size(); ++y) diff = std::max(diff, std::abs(ev.pg()[y] - prev_pg[y]) / w[y]);
            regularity.add(diff * w[x]);

            d = ev.p() - p_star;
            d_lam_f.noalias() = d * lam_f_star;
            poisson_solve_into(p_star, pi_star, d_lam_f, ws, lam_w);
            remainder.add(ev.pi().dot(d * lam_w));

            if (j - 1 == n_grid[gi_ac]) {
                const double scale = 1.0 / std::sqrt(static_cast<double>(j - 1));
                a.values[gi_ac] = regularity.value() * scale;
                c.values[gi_ac] = remainder.value() * scale;
                ++gi_ac;
            }
        }
        prev_pg = ev.pg();
        it_step(st, model);
        ++st.step;
    }
    std::vector<DiagnosticSeries> out{std::move(a), std::move(b), std::move(c)};
    for (auto& s : out) fit_series_slope(s);
    return out;
}

DiagnosticSeries vstat_moment_check(const ITConfig& cfg, const FiniteFunction& h, int k_order,
                                    std::span<const std::uint64_t> n_grid, std::size_t n_replications,
                                    int threads) {
    require_grid(n_grid);
    if (k_order != 1 && k_order != 2) throw ValidationError("k_order", "must be 1 or 2");
    if (n_replications < 2) throw ValidationError("replications", "must be >= 2");
    const FiniteITModel model(cfg);
    if (model.auxiliary_kind() == AuxiliaryMode::Kind::frozen) {
        throw PreconditionError("vstat_moment_check: needs an iid or markov auxiliary process");
    }
    if (h.size() != model.n_states()) throw ShapeError("vstat_moment_check: h size mismatch");
    const double theta_star_h = expectation(model.theta_star().weights(), h.values());
    const std::uint64_t n_max = n_grid.back();
    const int power = 2 * k_order;

    std::vector<std::vector<double>> rows(n_replications, std::vector<double>(n_grid.size()));
    parallel_for(n_replications, resolve_threads(threads), [&](std::size_t r) {
        ITChainState st = auxiliary_only_state(model, derive_stream(cfg.seed, r));
        CompensatedSum acc;
        std::size_t gi = 0;
        for (std::uint64_t j = 1; j <= n_max; ++j) {
            advance_auxiliary(st, model);
            acc.add(h[st.y]);
            if (j == n_grid[gi]) {
                const double dev = acc.value() / static_cast<double>(j) - theta_star_h;
                rows[r][gi++] = std::pow(dev, power);
            }
        }
    });

    DiagnosticSeries out;
    out.label = k_order == 1 ? "vstat_moment_k1" : "vstat_moment_k2";
    out.n = as_doubles(n_grid);
    out.values = column_means(rows, n_grid.size());
    fit_series_slope(out);
    return out;
}

}  // namespace imcmc
