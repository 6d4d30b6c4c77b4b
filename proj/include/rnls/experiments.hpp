#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rnls/diagnostics.hpp"
#include "rnls/groundstate.hpp"
#include "rnls/integrator.hpp"

namespace rnls {

enum class DataFamily { scaled_Q, gaussian };
std::string to_string(DataFamily f);
DataFamily data_family_from_string(const std::string& s);

/// global: finished with ||grad u|| and the Sigma norm within growth_bound of
/// their initial values. undetermined: anything else (growth without detection,
/// or lost resolution on the finest allowed grid).
enum class Outcome { global, blowup, undetermined };
std::string to_string(Outcome o);
Outcome outcome_from_string(const std::string& s);

/// Oscillator ground state (gamma/pi)^{n/4} e^{-gamma |x|^2/2} scaled to L2 norm `norm`.
WaveField oscillator_state(const GridSpec& grid, double gamma, double norm = 1.0);

using DataBuilder = std::function<WaveField(const GridSpec&)>;

struct RunOptions {
    int n = 2;
    double half_extent = 10.0;
    std::size_t points = 128;      // starting points per axis
    std::size_t max_points = 512;  // doubled up to here when resolution is lost without a verdict
    double dt = 4e-3;
    double t_end = 0.0;            // 0: three trap periods
    double growth_bound = 10.0;
    std::uint64_t cadence = 10;
    BlowupControl control;
    kernels::Exec exec = kernels::Exec::parallel;
    bool keep_series = true;
};

struct RunRecord {
    BlowupVerdict verdict;
    Outcome outcome = Outcome::undetermined;
    RunStatus status = RunStatus::running;
    double t_detect = 0.0;   // NaN unless blowup was detected
    double t_stop = 0.0;
    double max_grad_ratio = 1.0;
    double max_sigma_ratio = 1.0;
    std::size_t points = 0;  // grid actually used
    int attempts = 0;
    double runtime = 0.0;    // seconds, all attempts
    std::vector<DiagnosticsRecord> series;
};

/// Classifies the initial data, then evolves it, escalating the grid on lost resolution.
RunRecord run_classified(const PhysicsParams& params, const DataBuilder& data, const RunOptions& options);

struct SweepRow {
    double c = 0.0;
    DataFamily family = DataFamily::scaled_Q;
    RunRecord run;
};

struct SweepResult {
    PhysicsParams params;
    DataFamily family = DataFamily::scaled_Q;
    double unit_mass = 0.0;  // ||Q||_2 of the profile the mass factors refer to
    std::optional<double> mass_lambda_max;  // inhomogeneous reference masses ||Q_{lambda_max}||_2
    std::optional<double> mass_lambda_min;  //   and ||Q_{lambda_min}||_2
    std::vector<SweepRow> rows;

    /// No global row above a blowup row (rows sorted by c).
    bool monotone() const;
    /// No row whose verdict predicts blowup ended as global.
    bool verdicts_confirmed() const;
    /// (largest global c, smallest blowup c) when both exist.
    std::optional<std::pair<double, double>> transition() const;
};

struct SweepOptions {
    RunOptions run;
    double alpha = 1.0;
    double theta = 0.0;
    unsigned workers = 1;  // rows in flight; each uses serial kernels when > 1
};

/// Mass factors c are relative to ||Q_lambda||_2 with lambda the power-law
/// coefficient: scaled-Q data is c e^{i theta} alpha^{n/2} Q_lambda(alpha x),
/// Gaussian data the oscillator ground state with mass c^2 ||Q_lambda||^2.
/// Throws ConfigError unless the model is a mass-critical focusing power law.
SweepResult threshold_sweep(const PhysicsParams& params, DataFamily family, const std::vector<double>& c_list,
                            const SweepOptions& options = {});

/// Bounds of a radial coefficient over R^n: the inhomogeneous model's limits
/// are exact (lambda0 + 1 at the origin, lambda0 at infinity); user profiles are
/// sampled out to radius 1e3.
std::pair<double, double> coefficient_bounds(const NonlinearityModel& model);

/// Sweep of c Q_{lambda_min} data for an inhomogeneous model, c relative to
/// ||Q_{lambda_min}||_2, with both reference masses recorded.
SweepResult inhomogeneous_threshold(const PhysicsParams& params, const std::vector<double>& c_list,
                                    const SweepOptions& options = {});

/// Least-squares slope of log ||grad u|| against log(t_ref - t).
///
/// The fit uses samples with t_ref - t in [span/10, span], span = t_ref - t_first:
/// the last full decade that is not dominated by the gap between t_ref and the
/// unknown blowup time. free_slope/free_t_star come from the same fit with the
/// reference time treated as a parameter (t_star > t_last).
struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // rms of the log-log fit
    std::size_t samples = 0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    double t_ref = 0.0;
    double free_slope = 0.0;
    double free_t_star = 0.0;
};

/// Throws NumericalError("insufficient samples ...") with fewer than min_samples in the window.
RateFit blowup_rate_fit(const std::vector<double>& t, const std::vector<double>& grad_norm, double t_ref,
                        std::size_t min_samples = 30);
RateFit blowup_rate_fit(const RunRecord& run, std::size_t min_samples = 30);

/// u(x) -> u(R_angle^{-1} x) by three spectral shears (n = 2, or about the x3 axis).
WaveField rotate_field(const WaveField& u, double angle);

/// ||v||_Sigma^2 = ||grad v||^2 + ||x v||^2 + ||v||^2.
double sigma_norm(const WaveField& v);

struct OrbitDistance {
    double distance = 0.0;
    double phase = 0.0;
    double angle = 0.0;
};

/// min over theta and phi of || e^{i theta} R_phi u - ref ||_Sigma: theta in closed
/// form, phi by golden-section search on [0, 2 pi) after a coarse scan.
OrbitDistance orbit_distance(const WaveField& u, const WaveField& ref, int scan = 16);

enum class Perturbation { random_smooth, dipole, chirp };
std::string to_string(Perturbation p);
Perturbation perturbation_from_string(const std::string& s);

/// Direction field eta on the grid of q: smooth random (seeded), x1 q, or i |x|^2 q.
WaveField perturbation_direction(const WaveField& q, Perturbation kind, std::uint64_t seed = 1);

struct StabilityOptions {
    double half_extent = 8.0;
    std::size_t points = 64;
    double dt = 5e-3;
    double periods = 5.0;
    std::uint64_t cadence = 20;
    std::uint64_t seed = 1;
    MinimizeOptions minimize;
    kernels::Exec exec = kernels::Exec::parallel;
};

struct StabilityTrace {
    std::string direction;  // "none" for the delta = 0 control
    double delta = 0.0;
    std::vector<double> t;
    std::vector<double> distance;
    double sup_distance = 0.0;
    RunStatus status = RunStatus::running;
};

struct StabilityResult {
    GroundStateResult ground;
    double sigma_norm_ground = 0.0;
    std::vector<StabilityTrace> traces;  // control first, then one per direction
};

/// u0 = (Q + delta eta) c / ||Q + delta eta||_2 with ||eta||_Sigma = ||Q||_Sigma.
StabilityResult stability_run(const PhysicsParams& params, double c, double delta,
                              const std::vector<Perturbation>& directions, const StabilityOptions& options = {});

/// gamma^{(|m|+1)/2} / sqrt(pi |m|!) |x|^|m| e^{-gamma |x|^2/2} e^{i m theta}, renormalized
/// to unit mass on the grid. Throws ConfigError when the grid does not resolve it.
WaveField vortex_state(const GridSpec& grid, double gamma, int m);

struct VortexRow {
    int m = 0;
    double kinetic = 0.0;      // int |grad psi|^2
    double trap = 0.0;         // int V |psi|^2
    double angular = 0.0;      // Re int psi-bar L_z psi
    double interaction = 0.0;  // int G(|psi|^2)
    double energy = 0.0;
    double leading = 0.0;      // (|m|+1) gamma - Omega m - K
    double tail = 0.0;         // K int |psi|^a, exact for the continuum state
    double analytic = 0.0;     // leading - tail
    double difference = 0.0;   // energy - analytic
};

struct VortexResult {
    double gamma = 1.0, Omega = 0.0, K = 1.0, a = 4.0;
    std::vector<VortexRow> rows;
    bool strictly_decreasing() const;
    bool strictly_increasing() const;
    /// (E(m_hi) - E(m_lo)) / (m_hi - m_lo); throws if either m is missing.
    double slope(int m_lo, int m_hi) const;
};

/// Energies of psi_m under G(v) = K (v + v^{a/2}). Needs n = 2, gamma > 0, a > 2.
VortexResult vortex_counterexample(double gamma, double Omega, double K, double a, const std::vector<int>& m_list,
                                   const GridSpec& grid);

}  // namespace rnls
