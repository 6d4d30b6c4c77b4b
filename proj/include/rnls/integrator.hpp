#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rnls/diagnostics.hpp"
#include "rnls/kernels.hpp"
#include "rnls/operators.hpp"

namespace rnls {

enum class RunStatus { running, finished, blowup_detected, resolution_lost };
std::string to_string(RunStatus s);
RunStatus run_status_from_string(const std::string& s);

/// Thresholds of the blowup monitor, as ratios of ||grad u|| to its initial value.
struct BlowupControl {
    double refine_trigger = 5.0;   // refinement starts here
    double detect_ratio = 1e3;     // blowup declared above this
    double tail_limit = 1e-6;      // spectral tail fraction counted as lost resolution
    bool refine = true;            // false: never shrink dt, stop on lost resolution
};

struct EvolutionState {
    WaveField field;
    PhysicsParams params;
    double t = 0.0;
    std::uint64_t steps = 0;
    double dt = 1e-3;
    RunStatus status = RunStatus::running;

    // blowup monitor
    double grad_norm0 = 0.0;
    double grad_ratio = 1.0;       // latest ||grad u|| / grad_norm0
    double max_grad_ratio = 1.0;
    double tail = 0.0;             // latest spectral tail fraction
    bool refining = false;
    int refine_level = 0;
    double t_detect = std::numeric_limits<double>::quiet_NaN();

    // virial_residual predictor
    VirialTracker tracker;
    bool tracker_ready = false;

    EvolutionState() = default;
    EvolutionState(WaveField u, PhysicsParams p, double dt_, double t0 = 0.0)
        : field(std::move(u)), params(std::move(p)), t(t0), dt(dt_) {}
};

/// Strang splitting for  i u_t = (T - Omega L_z + V) u - kappa N(x,u):
///
///   phase(dt/2) . [kinetic + rotation](dt) . phase(dt/2)
///
/// The phase sub-flow  i u_t = (V - kappa G'(x,|u|^2)) u  keeps |u| fixed, so it
/// is the exact pointwise phase factor. The linear sub-flow is exact too: T
/// commutes with L_z, and exp(i dt Omega L_z) is the rotation u(x) -> u(R x)
/// by the angle Omega dt, applied as three shears
///   x1 += a x2,  x2 += b x1,  x1 += a x2,   a = -tan(phi/2), b = sin(phi),
/// each a diagonal multiplier in a one-axis partial transform. Half of the
/// kinetic factor sits on each side of the shears (the x1 halves ride on the
/// x1 shears), so the step is a palindrome and running it with -dt undoes it.
class Integrator {
public:
    Integrator(const OperatorSet& ops, double dt, kernels::Exec exec = kernels::Exec::parallel);

    double dt() const { return dt_; }
    /// Rebuilds the multiplier tables for a new step size (any sign).
    void set_dt(double dt);

    /// One Strang step in place. Afterwards grad_norm()/tail_fraction() describe
    /// the field entering the linear sub-flow.
    void step(WaveField& u);

    double grad_norm() const { return monitor_grad_; }
    double tail_fraction() const { return monitor_tail_; }

    const OperatorSet& operators() const { return ops_; }

private:
    void phase_half_step(WaveField& u) const;
    /// Forward transform along axis, optional monitor accumulation, multiply by the
    /// table selected per line, inverse transform.
    void axis_pass(WaveField& u, int axis, const std::vector<cplx>& table, bool table_by_line, bool monitor,
                   double& grad2, double& tail);

    const OperatorSet& ops_;
    kernels::Exec exec_;
    double dt_ = 0.0;
    bool rotate_ = false;
    std::vector<double> phase_potential_;   // -(dt/2) V
    std::vector<double> phase_nonlinear_;   // (dt/2) kappa lambda(x)
    std::vector<std::vector<cplx>> kinetic_;  // per axis, 1/N folded in
    std::vector<cplx> shear_x_;             // half kinetic_x * exp(i k1 a x2) / N0, table [m + N0 * i1]
    std::vector<cplx> shear_y_;             // exp(i k2 b x1) / N1, table [m + N1 * i0]
    std::vector<std::vector<double>> monitor_k2_;    // per axis, k^2 by bin
    std::vector<std::vector<double>> monitor_high_;  // per axis, 1 above 2/3 of Nyquist
    double monitor_grad_ = 0.0;
    double monitor_tail_ = 0.0;
};

/// One step of the state: Strang step, clock advance, blowup monitor.
void step(EvolutionState& state, Integrator& integrator, const BlowupControl& control = {});

/// Applies the refinement rules to the state after a step:
/// below the trigger nothing changes; from the trigger on dt is halved once on
/// entry and again each time the gradient ratio doubles; blowup is declared when
/// the ratio exceeds detect_ratio or resolution is lost while refining. Lost
/// resolution outside refinement stops the run as resolution_lost.
void refine_near_blowup(EvolutionState& state, Integrator& integrator, const BlowupControl& control = {});

struct EvolveOptions {
    double t_end = 0.0;
    std::uint64_t cadence = 10;
    BlowupControl control;
    /// Optional cap on the number of steps taken in this call.
    std::uint64_t max_steps = std::numeric_limits<std::uint64_t>::max();
    kernels::Exec exec = kernels::Exec::parallel;
    std::function<void(const EvolutionState&, const DiagnosticsRecord&)> on_record;
};

/// Steps until t_end (the last step is shortened to land on it), blowup,
/// lost resolution, or max_steps. Records the initial state when no step has
/// been taken yet, every `cadence` steps, and the final state.
std::vector<DiagnosticsRecord> evolve(EvolutionState& state, const EvolveOptions& options);

/// Same, with a caller-owned operator set (must match state.params and grid).
std::vector<DiagnosticsRecord> evolve(EvolutionState& state, const OperatorSet& ops, const EvolveOptions& options);

}  // namespace rnls
