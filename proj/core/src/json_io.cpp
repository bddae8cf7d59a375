#include "imcmc/json_io.hpp"

#include "json_detail.hpp"

namespace imcmc {

namespace detail {

json parse_json(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(source, e.what());
    }
}

const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) throw ValidationError(path, "expected an object");
    const auto it = j.find(key);
    if (it == j.end()) throw ValidationError(path.empty() ? key : path + "." + key, "missing");
    return *it;
}

double get_double(const json& j, const std::string& key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_number()) throw ValidationError(path.empty() ? key : path + "." + key, "expected a number");
    return v.get<double>();
}

std::uint64_t get_u64(const json& j, const std::string& key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_number_unsigned()) throw ValidationError(path.empty() ? key : path + "." + key, "expected a nonnegative integer");
    return v.get<std::uint64_t>();
}

std::vector<double> get_doubles(const json& j, const std::string& path) {
    if (!j.is_array()) throw ValidationError(path, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw ValidationError(path, "expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

namespace {

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

std::optional<std::size_t> read_state(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return static_cast<std::size_t>(get_u64(j, key, path));
}

const char* mode_name(AuxiliaryMode::Kind k) {
    switch (k) {
        case AuxiliaryMode::Kind::iid: return "iid";
        case AuxiliaryMode::Kind::markov: return "markov";
        case AuxiliaryMode::Kind::frozen: return "frozen";
    }
    return "iid";
}

}  // namespace

json kernel_json(const FiniteKernel& k) {
    json rows = json::array();
    for (std::size_t x = 0; x < k.n_states(); ++x) {
        json row = json::array();
        for (std::size_t y = 0; y < k.n_states(); ++y) row.push_back(k(x, y));
        rows.push_back(std::move(row));
    }
    return json{{"n_states", k.n_states()}, {"rows", std::move(rows)}};
}

json measure_json(const FiniteMeasure& m) { return json{{"weights", to_std(m.weights())}}; }

json target_json(const FiniteTarget& t) {
    return json{{"weights", to_std(t.weights())}, {"beta", t.beta()}, {"tau", t.tau()}};
}

json config_json(const ITConfig& cfg, bool with_seed) {
    json aux{{"mode", mode_name(cfg.auxiliary.kind)}};
    if (cfg.auxiliary.measure) aux["measure"] = measure_json(*cfg.auxiliary.measure);
    if (cfg.auxiliary.kernel) aux["kernel"] = kernel_json(*cfg.auxiliary.kernel);
    if (cfg.auxiliary.initial_state) aux["initial_state"] = *cfg.auxiliary.initial_state;
    json j{{"epsilon", cfg.epsilon},
           {"target", target_json(cfg.target)},
           {"base_kernel", kernel_json(cfg.base_kernel)},
           {"auxiliary", std::move(aux)},
           {"n_steps", cfg.n_steps}};
    if (cfg.initial_state) j["initial_state"] = *cfg.initial_state;
    if (with_seed) j["seed"] = cfg.seed;
    return j;
}

FiniteKernel read_kernel(const json& j, const std::string& path) {
    const std::uint64_t n = get_u64(j, "n_states", path);
    const json& rows = require(j, "rows", path);
    const std::string rows_path = join(path, "rows");
    if (!rows.is_array() || rows.size() != n) throw ValidationError(rows_path, "expected n_states rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t x = 0; x < n; ++x) {
        const std::vector<double> row = get_doubles(rows[x], rows_path);
        if (row.size() != n) throw ValidationError(rows_path, "expected n_states columns");
        for (std::size_t y = 0; y < n; ++y) m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = row[y];
    }
    try {
        return FiniteKernel(std::move(m));
    } catch (const Error& e) {
        throw ValidationError(path, e.what());
    }
}

FiniteMeasure read_measure(const json& j, const std::string& path) {
    const std::string wpath = join(path, "weights");
    try {
        return FiniteMeasure(to_vector(get_doubles(require(j, "weights", path), wpath)));
    } catch (const ValidationError&) {
        throw;
    } catch (const Error& e) {
        throw ValidationError(wpath, e.what());
    }
}

FiniteTarget read_target(const json& j, const std::string& path) {
    const std::string wpath = join(path, "weights");
    const std::vector<double> w = get_doubles(require(j, "weights", path), wpath);
    const double beta = get_double(j, "beta", path);
    const double tau = j.contains("tau") ? get_double(j, "tau", path) : 0.5;
    try {
        return FiniteTarget(to_vector(w), beta, tau);
    } catch (const ValidationError&) {
        throw;
    } catch (const Error& e) {
        throw ValidationError(wpath, e.what());
    }
}

ITConfig read_config(const json& j, const std::string& path, bool* seed_present) {
    ITConfig cfg;
    cfg.epsilon = get_double(j, "epsilon", path);
    if (!(cfg.epsilon >= 0.0 && cfg.epsilon < 1.0)) throw ValidationError(join(path, "epsilon"), "must lie in [0, 1)");
    cfg.target = read_target(require(j, "target", path), join(path, "target"));

    const auto bk = j.find("base_kernel");
    if (bk == j.end() || (bk->is_string() && bk->get<std::string>() == "metropolis_uniform")) {
        cfg.base_kernel = metropolis_kernel_finite(cfg.target, uniform_proposal(cfg.target.n_states()));
    } else if (bk->is_object()) {
        cfg.base_kernel = read_kernel(*bk, join(path, "base_kernel"));
    } else {
        throw ValidationError(join(path, "base_kernel"), "expected a kernel object or \"metropolis_uniform\"");
    }

    if (const auto aux = j.find("auxiliary"); aux != j.end()) {
        const std::string apath = join(path, "auxiliary");
        const std::string mode = aux->value("mode", std::string("iid"));
        if (mode == "iid") {
            cfg.auxiliary.kind = AuxiliaryMode::Kind::iid;
        } else if (mode == "markov") {
            cfg.auxiliary.kind = AuxiliaryMode::Kind::markov;
        } else if (mode == "frozen") {
            cfg.auxiliary.kind = AuxiliaryMode::Kind::frozen;
        } else {
            throw ValidationError(join(apath, "mode"), "expected iid, markov or frozen");
        }
        if (aux->contains("measure")) cfg.auxiliary.measure = read_measure(aux->at("measure"), join(apath, "measure"));
        if (aux->contains("kernel")) cfg.auxiliary.kernel = read_kernel(aux->at("kernel"), join(apath, "kernel"));
        cfg.auxiliary.initial_state = read_state(*aux, "initial_state", apath);
    }
    cfg.initial_state = read_state(j, "initial_state", path);
    cfg.n_steps = j.contains("n_steps") ? get_u64(j, "n_steps", path) : 1;
    if (cfg.n_steps < 1) throw ValidationError(join(path, "n_steps"), "must be >= 1");
    const bool has_seed = j.contains("seed");
    cfg.seed = has_seed ? get_u64(j, "seed", path) : 0;
    if (seed_present != nullptr) *seed_present = has_seed;

    // Eager validation of cross-field invariants.
    try {
        (void)FiniteITModel(cfg);
    } catch (const ValidationError&) {
        throw;
    } catch (const Error& e) {
        throw ValidationError(path.empty() ? "config" : path, e.what());
    }
    return cfg;
}

}  // namespace detail

std::string to_json(const FiniteKernel& k) { return detail::kernel_json(k).dump(); }
std::string to_json(const FiniteMeasure& m) { return detail::measure_json(m).dump(); }
std::string to_json(const FiniteTarget& t) { return detail::target_json(t).dump(); }
std::string to_json(const ITConfig& cfg) { return detail::config_json(cfg).dump(2); }

FiniteKernel kernel_from_json(const std::string& text) {
    return detail::read_kernel(detail::parse_json(text, "kernel"), "");
}
FiniteMeasure measure_from_json(const std::string& text) {
    return detail::read_measure(detail::parse_json(text, "measure"), "");
}
FiniteTarget target_from_json(const std::string& text) {
    return detail::read_target(detail::parse_json(text, "target"), "");
}
ITConfig config_from_json(const std::string& text) {
    return detail::read_config(detail::parse_json(text, "config"), "");
}

}  // namespace imcmc
