#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rnls/grid.hpp"
#include "rnls/operators.hpp"

namespace rnls {

/// Monitored functionals of one field snapshot.
///
/// kinetic is the full integral of |grad u|^2 (the energy carries half of it),
/// interaction the integral of G(x,|u|^2) (the energy carries -kappa times it).
struct DiagnosticsRecord {
    double t = 0.0;
    double mass = 0.0;
    double kinetic = 0.0;
    double trap = 0.0;
    double interaction = 0.0;
    double angular = 0.0;        // l_Omega = -Omega Re int u-bar L_z u
    double energy = 0.0;
    double free_energy = 0.0;    // E_00 = kinetic/2 - kappa interaction
    double J = 0.0;              // int |x|^2 |u|^2
    double dJ = 0.0;             // 2 Im int u-bar x.grad u
    double virial_residual = 0.0;
    double grad_norm = 0.0;
    double sigma_norm = 0.0;     // sqrt(kinetic + J + mass)
    double boundary_mass = 0.0;
    double tail_fraction = 0.0;

    // Not part of the CSV row.
    double lz_expectation = 0.0;  // Re int u-bar L_z u
    double lz_imaginary = 0.0;    // Im int u-bar L_z u, zero up to roundoff
    double weighted_lpp = 0.0;    // int lambda(x) |u|^{p+1}
    double slope_lpp = 0.0;       // int x.grad lambda |u|^{p+1}

    /// Column values in CSV order.
    std::array<double, 15> row() const;
    static DiagnosticsRecord from_row(const std::array<double, 15>& row);
    static const std::array<const char*, 15>& column_names();
};

/// Every functional in one pass over the field: one forward transform plus one
/// inverse per axis for the gradient.
DiagnosticsRecord record(const WaveField& u, const OperatorSet& ops, double t = 0.0);

/// Fraction of spectral mass with |k_j| > (2/3) k_max,j, maximized over axes.
double spectral_tail_fraction(const WaveField& u);

/// J' = 2 Im int u-bar x . grad u.
double variance_prime(const WaveField& u);

/// J'' predicted by the virial identity from the record's functionals:
/// 4E - 4 gamma^2 J + kappa (2/(p+1)) (4 - n(p-1)) int lambda|u|^{p+1}
///   - 4 l + kappa (4/(p+1)) int x.grad lambda |u|^{p+1}.
/// Throws ConfigError for the general-G model, which has no closed virial law.
double virial_rhs(const DiagnosticsRecord& r, const PhysicsParams& params);
double virial_rhs(const WaveField& u, const OperatorSet& ops);

/// f(s) = kappa (4/(p+1)) int x.grad lambda |u|^{p+1}: the inhomogeneous source
/// in J'' + 4 gamma^2 J = 4(E - l) + f.
double virial_source(const DiagnosticsRecord& r, const PhysicsParams& params);

/// Radial weight rho(r) with its first four radial derivatives.
struct RadialWeight {
    std::function<std::array<double, 5>(double)> derivatives;

    static RadialWeight square();                 // |x|^2
    static RadialWeight constant(double value);
    /// Smooth compactly supported-like bump: R^2 (1 - exp(-|x|^2/R^2)).
    static RadialWeight saturating(double R);
};

/// J_rho = int rho |u|^2.
double localized_variance(const WaveField& u, const RadialWeight& rho);

/// J_rho'' = -1/4 int Lap^2 rho |u|^2 - kappa (p-1)/(p+1) int lambda Lap rho |u|^{p+1}
///           + int grad u-bar . Hess(rho) grad u - gamma^2 int x.grad rho |u|^2
///           + kappa (2/(p+1)) int grad lambda . grad rho |u|^{p+1}.
/// Rejects weights whose odd derivatives do not vanish at the origin.
double localized_virial_rhs(const WaveField& u, const OperatorSet& ops, const RadialWeight& rho);

/// J(t) = C sin(2 gamma t + beta) + D with D = (E - l)/gamma^2.
struct ClosedFormVariance {
    double C = 0.0;
    double beta = 0.0;
    double D = 0.0;
    double gamma = 1.0;
    std::optional<double> first_zero;

    double operator()(double t) const;
    double derivative(double t) const;
    double second_derivative(double t) const;
};

/// Throws ConfigError if gamma <= 0. first_zero is set when C >= |D|
/// (up to a relative slack of 1e-9).
ClosedFormVariance closed_form_variance(double J0, double dJ0, double E, double l, double gamma);

enum class BlowupCondition { a, b, c, d, none };
std::string to_string(BlowupCondition c);

struct BlowupVerdict {
    BlowupCondition condition = BlowupCondition::none;
    double window_lo = 0.0;
    double window_hi = 0.0;
    double E_minus_l = 0.0;
    ClosedFormVariance variance;
    /// Positive root of J0 + J0' t + 2(E-l) t^2 for (c)/(d).
    std::optional<double> quadratic_root;
};

/// Checks the four sufficient conditions in order: (a),(b) for the mass-critical
/// power, (c),(d) above it. `tolerance` is a relative slack on the comparisons
/// (scaled by kinetic + trap), so data sitting exactly on the boundary of (a)
/// is classified as (a).
BlowupVerdict classify_blowup(const DiagnosticsRecord& initial, const PhysicsParams& params,
                              double tolerance = 1e-7);

/// (2/n) int|grad u|^2 int|x|^2|u|^2 / (int|u|^2)^2, >= 1 with equality on Gaussians.
double uncertainty_ratio(const WaveField& u);

/// Measured J versus the homogeneous closed form and the Duhamel reconstruction.
struct DuhamelReport {
    std::vector<double> t;
    std::vector<double> measured;
    std::vector<double> bound;           // closed form from the initial data
    std::vector<double> reconstruction;  // bound + int_0^t sin(2g(t-s))/(2g) f(s) ds
    double min_slack = 0.0;              // min over samples of bound - measured
    double max_reconstruction_error = 0.0;  // max |reconstruction - measured| / J(0)
};

DuhamelReport duhamel_variance_bound(const std::vector<DiagnosticsRecord>& series, const PhysicsParams& params);

/// Online predictor for the virial_residual column.
///  - mass-critical power (or zero nonlinearity): closed form plus Duhamel term
///  - supercritical power: the Taylor bound J0 + J0' t + 2(E-l) t^2
///  - general-G: no predictor, residual is NaN
class VirialTracker {
public:
    VirialTracker() = default;
    VirialTracker(const DiagnosticsRecord& initial, const PhysicsParams& params);

    /// Feeds records in time order; returns J - prediction.
    double residual(const DiagnosticsRecord& r);

    /// Plain-double state for checkpoints.
    std::vector<double> state() const;
    void restore(const std::vector<double>& s);

private:
    enum Mode { none = 0, closed = 1, taylor = 2 };
    int mode_ = none;
    double gamma_ = 1.0;
    double t0_ = 0.0, J0_ = 0.0, dJ0_ = 0.0, EL_ = 0.0;
    ClosedFormVariance cf_;
    // trapezoid accumulators of int cos(2g s) f, int sin(2g s) f
    double acc_cos_ = 0.0, acc_sin_ = 0.0, last_t_ = 0.0, last_f_ = 0.0;
    bool started_ = false;
    double kappa_ = 1.0, p_ = 3.0;
};

/// Fourth-order smoothed second derivative at sample k of uniformly spaced data:
/// Richardson combination of centered differences at spacings m and 2m samples.
double smoothed_second_derivative(const std::vector<double>& values, double spacing, std::size_t k,
                                  std::size_t m = 5);

}  // namespace rnls
