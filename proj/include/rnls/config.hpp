#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rnls/operators.hpp"

namespace rnls {

enum class ExperimentKind { groundstate, evolve, sweep, stability, vortex, inhomogeneous };
std::string to_string(ExperimentKind k);
/// Accepts the CLI spellings; "inhom" and "inhomogeneous" both name the last kind.
ExperimentKind experiment_from_string(const std::string& s);

/// Flat run configuration. Every `c` is a factor relative to ||Q_lambda||_2 of the
/// configured power (lambda_min for the inhomogeneous coefficient); Gaussian data
/// with factor c carries mass c^2 ||Q_lambda||_2^2.
struct RunConfig {
    ExperimentKind experiment = ExperimentKind::evolve;

    // [grid]
    int n = 2;
    double L = 8.0;
    std::size_t N = 128;

    // [physics]
    double Omega = 0.0;
    double gamma = 1.0;
    double p = 3.0;
    int kappa = 1;
    std::string nonlinearity = "power";  // power | inhomogeneous
    double lambda = 1.0;
    double lambda0 = 1.0;
    double decay = 2.0;

    // [initial]
    std::string data = "gaussian";  // gaussian | scaled-Q
    double c = 0.5;
    double alpha = 1.0;
    double theta = 0.0;
    double nu = 0.0;

    // [numerics]
    double dt = 0.0;
    double t_end = 0.0;
    std::uint64_t cadence = 10;
    std::uint64_t seed = 1;
    double refine_trigger = 5.0;
    double detect_ratio = 1e3;
    double tail_limit = 1e-6;
    bool refine = true;
    double growth_bound = 10.0;
    std::size_t max_N = 512;
    double tolerance = 1e-9;
    int max_iterations = 20000;
    std::uint64_t max_steps = 0;  // evolve: stop after this many steps in one invocation; 0 = no cap

    // [sweep]
    std::string family = "scaled-Q";
    std::vector<double> c_list;
    unsigned workers = 1;

    // [stability]
    double delta = 1e-2;
    std::vector<std::string> directions{"random", "dipole", "chirp"};
    double periods = 5.0;

    // [vortex]
    double K = 1.0;
    double a = 4.0;
    int m_min = 0;
    int m_max = 20;

    // [io]
    std::string output = "out";
    std::uint64_t checkpoint_interval = 0;  // steps; 0 disables periodic checkpoints

    PhysicsParams physics() const;
    bool operator==(const RunConfig&) const = default;
};

/// Parses INI-style text: `key = value` lines, `[section]` headers, `#` or `;`
/// comments. `experiment` is required and lives before the first section.
/// Fills kind-dependent defaults (dt = 1e-3/gamma, t_end = one trap period for
/// evolve) and validates every field. Errors are ConfigError with "line N: ...".
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical text of a config; parse_config(echo_config(c)) == c.
std::string echo_config(const RunConfig& cfg);

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace rnls
