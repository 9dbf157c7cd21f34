#pragma once

#include <string>

#include "multicause/harness.hpp"

namespace multicause {

/// Parses an experiment config. The document must carry `"schema": 1`;
/// unknown keys anywhere are rejected. Indices in the file (focal sets) are
/// one-based. Throws ConfigError, with line and column for syntax errors.
///
///   {
///     "schema": 1,
///     "design": {"type": "medical", "beta": [0, 0.3]},
///     "estimators": [{"name": "naive"}, {"name": "penalized_full", "lambda": "sqrt_n"}],
///     "n": 1000, "reps": 200, "seed": 7, "compare_oracle": true, "threads": 0
///   }
///
/// Design types: linear (k, m, theta, beta, gamma, sigma2, omega2,
/// focal_idx), medical (beta), subset_sim (m, beta_rule, redraw_beta),
/// quadratic (rho, m), logistic (rho).
ExperimentConfig parse_config(const std::string &text);
ExperimentConfig load_config(const std::string &path);

}  // namespace multicause
