#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "rnls/grid.hpp"
#include "rnls/kernels.hpp"
#include "rnls/operators.hpp"

namespace rnls {

/// Positive radial solution of  -1/2 Lap Q - lambda Q^p = -Q  on a graded mesh.
/// Beyond the matching radius the profile is the decaying solution of the
/// linearized equation, tail_amplitude * r^-nu K_nu(sqrt(2) r), nu = (n-2)/2.
struct RadialProfile {
    double p = 3.0;
    double lambda = 1.0;
    int n = 2;
    std::vector<double> r;
    std::vector<double> q;
    std::vector<double> dq;
    double tail_amplitude = 0.0;
    double match_radius = 0.0;
    int bisections = 0;

    // Integrals over R^n.
    double mass = 0.0;     // int Q^2
    double kinetic = 0.0;  // int |grad Q|^2
    double lpp = 0.0;      // int Q^{p+1}

    double center() const { return q.front(); }
    double r_max() const { return r.back(); }
    /// Q and Q' at any radius (Hermite cubic on the mesh, Bessel tail beyond it).
    double value(double radius) const;
    double slope(double radius) const;

    /// Recomputes mass, kinetic and lpp from the samples.
    void update_integrals();
    /// max |Q'' + (n-1) Q'/r - 2 Q + 2 lambda Q^p| over interior mesh nodes.
    double ode_residual() const;
};

struct ShootingOptions {
    double tol = 1e-14;                 // relative width of the final Q(0) bracket
    std::size_t nodes = 4000;           // initial mesh intervals, doubled until residual_tol is met
    std::size_t max_nodes = 128000;
    double residual_tol = 1e-9;         // bound on ode_residual()
    double r_max = 20.0;                // extended until Q(r_max) < 1e-10 Q(0)
    std::optional<double> q0_lo, q0_hi; // explicit bracket for Q(0)
    int max_bisections = 200;
};

/// Throws ConfigError for p outside (1, 1 + 4/(n-2)) or lambda <= 0, and
/// NumericalError when no bracket is found, bisection does not converge, or
/// residual_tol is not reached within max_nodes.
RadialProfile solve_Q_radial(double p, double lambda, int n, const ShootingOptions& options = {});

/// Relative residuals of the three identities for  a Lap u + b u^p = c u
/// with a = 1/2, b = lambda, c = 1:
///   2a K = b n (p-1)/(p+1) P,   2c M = b (2 - n(p-1)/(p+1)) P,
///   a (2(p+1)/(n(p-1)) - 1) K = c M.
struct PohozaevResiduals {
    double kinetic_vs_potential = 0.0;
    double mass_vs_potential = 0.0;
    double kinetic_vs_mass = 0.0;
    double max() const;
};
PohozaevResiduals pohozaev_residuals(const RadialProfile& profile);

struct GNConstant {
    double c_gn = 0.0;            // 1 / inverse_formula
    double inverse_formula = 0.0; // closed form in lambda, ||Q||_2 and sigma = (p-1)/2
    double inverse_direct = 0.0;  // ||Q||_2^{2+2s-ns} ||grad Q||_2^{ns} / ||Q||_{p+1}^{p+1}
    double relative_gap = 0.0;
};
GNConstant gn_constant(const RadialProfile& profile);

/// u(x) = c e^{i theta} alpha^{n/2} Q(alpha |x|) e^{i nu |x|^2}.
/// Throws ConfigError if the grid dimension differs from the profile's or the
/// grid does not resolve the result (spectral tail above 1e-8 or mass near the
/// boundary above 1e-10).
WaveField lift_to_grid(const RadialProfile& profile, const GridSpec& grid, double c = 1.0, double alpha = 1.0,
                       double theta = 0.0, double nu = 0.0);

void write_profile_table(std::ostream& os, const RadialProfile& profile);
RadialProfile read_profile_table(std::istream& is);

struct MinimizeOptions {
    double tau = 0.0;          // initial step; 0 means 1e-2 / gamma
    double tau_max = 4.0;
    double tol = 1e-9;
    int max_iterations = 20000;
    kernels::Exec exec = kernels::Exec::parallel;
    bool keep_history = false;
};

struct GroundStateResult {
    WaveField field;
    double mass = 0.0;      // c
    double energy = 0.0;    // I_c
    double omega = 0.0;     // e^{i omega t} u is the standing wave
    double residual = 0.0;  // || H u - kappa N(u) + omega u ||_2
    int iterations = 0;
    bool converged = false;
    std::vector<double> energy_history;
};

/// Mass threshold ||Q_{lambda,1}||_2 for the focusing mass-critical problem,
/// with lambda the bound on the nonlinearity: lambda itself for the power law,
/// sup lambda(x) for the inhomogeneous model, (n+2)/n C for general G.
double critical_mass(const PhysicsParams& params);

/// Minimizes the energy on {||u||_2 = c} by a preconditioned normalized
/// gradient flow with energy backtracking. Throws ConfigError for |Omega| >= gamma,
/// for focusing mass-critical models with c >= critical_mass, and for focusing
/// supercritical models (energy unbounded below); NumericalError if the
/// iteration does not converge.
GroundStateResult minimize_energy_constrained(const OperatorSet& ops, double c, const WaveField& init,
                                              const MinimizeOptions& options = {});

/// Both sides of  int |u|^{2+4/n} <= c_GN ||grad_A u||^2 ||u||^{4/n},  A = Omega(-x2, x1, 0),
/// and the coercive lower bound on the energy that follows from it.
struct CoercivityReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;           // rhs - lhs
    double relative_slack = 0.0;  // slack / rhs (0 when rhs = 0)
    double c_gn = 0.0;
    double magnetic_kinetic = 0.0;   // int |grad_A u|^2
    double effective_trap = 0.0;     // int V_e |u|^2
    double energy = 0.0;
    double energy_lower_bound = 0.0; // 1/2 (1 - (||u||/||Q_lambda||)^{4/n}) int|grad_A u|^2 + int V_e |u|^2
};

/// Mass-critical models only (ConfigError otherwise).
CoercivityReport energy_lower_bound_check(const WaveField& u, const OperatorSet& ops);

}  // namespace rnls
