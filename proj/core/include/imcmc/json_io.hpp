#pragma once

#include <string>

#include "imcmc/it_sampler.hpp"
#include "imcmc/markov.hpp"
#include "imcmc/targets.hpp"

namespace imcmc {

// JSON forms:
//   kernel   {"n_states": n, "rows": [[...], ...]}     row-major
//   measure  {"weights": [...]}
//   target   {"weights": [...], "beta": b, "tau": t}   weights may be unnormalized
//   config   {"epsilon", "target", "base_kernel", "auxiliary", "initial_state", "n_steps", "seed"}
//            base_kernel is a kernel object or the string "metropolis_uniform" (the default);
//            auxiliary is {"mode": "iid" | "markov" | "frozen", "measure", "kernel", "initial_state"}.
// Readers throw ValidationError naming the offending field.

std::string to_json(const FiniteKernel& k);
std::string to_json(const FiniteMeasure& m);
std::string to_json(const FiniteTarget& t);
std::string to_json(const ITConfig& cfg);

FiniteKernel kernel_from_json(const std::string& text);
FiniteMeasure measure_from_json(const std::string& text);
FiniteTarget target_from_json(const std::string& text);
ITConfig config_from_json(const std::string& text);

}  // namespace imcmc
