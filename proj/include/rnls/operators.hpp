#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rnls/grid.hpp"
#include "rnls/kernels.hpp"

namespace rnls {

/// Which nonlinearity N(x,u) = G'(x,|u|^2) u the equation carries.
///
///  - power:          G(v) = 2 lambda/(p+1) v^((p+1)/2)
///  - inhomogeneous:  same with lambda(x) = lambda0 + (1+|x|^2)^(-m/2), or a
///                    user-supplied radial lambda(r)
///  - general:        user-supplied G(v), G'(v) with growth constant C and
///                    exponent p: 0 <= G(v) <= C (v + v^((p+1)/2))
struct NonlinearityModel {
    enum class Kind { power, inhomogeneous, general };

    Kind kind = Kind::power;
    double lambda = 1.0;
    double lambda0 = 1.0;
    double decay = 2.0;
    std::function<double(double)> radial_lambda;        // lambda(r), optional override
    std::function<double(double)> radial_lambda_prime;  // d lambda / dr
    std::function<double(double)> G;
    std::function<double(double)> G_prime;
    double growth_constant = 0.0;

    static NonlinearityModel power(double lambda);
    static NonlinearityModel inhomogeneous(double lambda0, double decay);
    static NonlinearityModel radial(std::function<double(double)> lambda_r, std::function<double(double)> dlambda_dr);
    static NonlinearityModel general(std::function<double(double)> G, std::function<double(double)> G_prime,
                                     double growth_constant);

    bool is_power_law() const { return kind != Kind::general; }
    /// lambda(x) at radius r (power and inhomogeneous kinds).
    double coefficient(double r) const;
    /// d lambda / dr at radius r; zero for the constant case.
    double coefficient_slope(double r) const;
    /// Bounds of lambda over [0, radius], sampled.
    std::pair<double, double> coefficient_range(double radius) const;
    std::string describe() const;
};

/// Parameters of  i u_t = -1/2 Lap u + V u - kappa N(x,u) - Omega L_z u,
/// with the isotropic trap V = gamma^2 |x|^2 / 2.
struct PhysicsParams {
    double Omega = 0.0;
    double gamma = 1.0;
    double p = 3.0;
    int n = 2;
    int kappa = +1;
    NonlinearityModel nonlinearity = NonlinearityModel::power(1.0);

    bool mass_critical() const;
    double critical_power() const { return 1.0 + 4.0 / n; }

    /// Interaction density G(x, v) at |x| = r, v = |u|^2.
    double G(double r, double v) const;
    /// Its derivative G'(x, v) with respect to v.
    double G_prime(double r, double v) const;

    /// Throws ConfigError on gamma <= 0, p < 1, p outside the energy-subcritical
    /// range, n outside {2,3}, kappa outside {+1,-1}, or a nonlinearity that
    /// fails its sampled hypothesis check.
    void validate() const;
};

/// Sampled check of the radial-coefficient hypothesis: lambda radial,
/// 0 < lambda_min <= lambda <= lambda_max, x . grad lambda <= 0.
/// Returns an empty string on success, otherwise the violated condition.
std::string check_coefficient_hypothesis(const NonlinearityModel& model, double radius);

/// Sampled growth check 0 <= G(v) <= C (v + v^((p+1)/2)) on a log grid of v.
std::string check_growth_hypothesis(const NonlinearityModel& model, double p);

/// Every piece of H = -1/2 Lap + V - Omega L_z on a fixed grid, plus the
/// pointwise nonlinearity. Immutable after construction; apply_* are pure.
class OperatorSet {
public:
    OperatorSet(const GridSpec& grid, const PhysicsParams& params);

    const GridSpec& grid() const { return grid_; }
    const PhysicsParams& params() const { return params_; }

    /// 1/2 |k|^2 at each spectral node.
    std::span<const double> kinetic_multiplier() const { return kinetic_; }
    /// V(x) = gamma^2 |x|^2 / 2 at each node.
    std::span<const double> potential() const { return potential_; }
    /// V_e = V - |A|^2 / 2 with A = Omega (-x2, x1, 0).
    std::span<const double> effective_potential() const { return effective_; }
    /// lambda(x) at each node (power-law kinds).
    std::span<const double> coefficient() const { return lambda_; }
    /// x . grad lambda at each node.
    std::span<const double> coefficient_radial_slope() const { return x_dot_grad_lambda_; }

    WaveField apply_kinetic(const WaveField& u) const;
    WaveField apply_potential(const WaveField& u) const;
    /// L_z u = i (x2 d1 - x1 d2) u.
    WaveField apply_Lz(const WaveField& u) const;
    /// N(x,u) = G'(x,|u|^2) u.
    WaveField apply_nonlinearity(const WaveField& u) const;
    /// H u = -1/2 Lap u + V u - Omega L_z u.
    WaveField apply_hamiltonian(const WaveField& u) const;
    /// -1/2 (grad - iA)^2 u + V_e u: the magnetic form of H.
    WaveField apply_magnetic_form(const WaveField& u) const;
    /// Components of the magnetic gradient (grad - iA) u.
    std::vector<WaveField> magnetic_gradient(const WaveField& u) const;

private:
    GridSpec grid_;
    PhysicsParams params_;
    std::vector<double> kinetic_;
    std::vector<double> potential_;
    std::vector<double> effective_;
    std::vector<double> lambda_;
    std::vector<double> x_dot_grad_lambda_;
    std::vector<double> radius_;
};

/// Spectral gradient components d_j u, j < dim.
std::vector<WaveField> gradient(const WaveField& u);

}  // namespace rnls
