#include "rnls/operators.hpp"

#include <cmath>
#include <sstream>

#include "rnls/spectral.hpp"

namespace rnls {

using kernels::Exec;
using kernels::for_each_index;

NonlinearityModel NonlinearityModel::power(double lambda) {
    NonlinearityModel m;
    m.kind = Kind::power;
    m.lambda = lambda;
    return m;
}

NonlinearityModel NonlinearityModel::inhomogeneous(double lambda0, double decay) {
    NonlinearityModel m;
    m.kind = Kind::inhomogeneous;
    m.lambda0 = lambda0;
    m.decay = decay;
    return m;
}

NonlinearityModel NonlinearityModel::radial(std::function<double(double)> lambda_r,
                                            std::function<double(double)> dlambda_dr) {
    NonlinearityModel m;
    m.kind = Kind::inhomogeneous;
    m.radial_lambda = std::move(lambda_r);
    m.radial_lambda_prime = std::move(dlambda_dr);
    return m;
}

NonlinearityModel NonlinearityModel::general(std::function<double(double)> G, std::function<double(double)> G_prime,
                                             double growth_constant) {
    NonlinearityModel m;
    m.kind = Kind::general;
    m.G = std::move(G);
    m.G_prime = std::move(G_prime);
    m.growth_constant = growth_constant;
    return m;
}

double NonlinearityModel::coefficient(double r) const {
    switch (kind) {
        case Kind::power:
            return lambda;
        case Kind::inhomogeneous:
            if (radial_lambda) return radial_lambda(r);
            return lambda0 + std::pow(1.0 + r * r, -0.5 * decay);
        case Kind::general:
            return 1.0;
    }
    return 0.0;
}

double NonlinearityModel::coefficient_slope(double r) const {
    if (kind != Kind::inhomogeneous) return 0.0;
    if (radial_lambda_prime) return radial_lambda_prime(r);
    return -decay * r * std::pow(1.0 + r * r, -0.5 * decay - 1.0);
}

std::pair<double, double> NonlinearityModel::coefficient_range(double radius) const {
    double lo = coefficient(0.0), hi = lo;
    constexpr int samples = 4096;
    for (int i = 1; i <= samples; ++i) {
        const double v = coefficient(radius * i / samples);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

std::string NonlinearityModel::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::power:
            os << "power(lambda=" << lambda << ")";
            break;
        case Kind::inhomogeneous:
            if (radial_lambda)
                os << "inhomogeneous(user radial lambda)";
            else
                os << "inhomogeneous(lambda0=" << lambda0 << ", m=" << decay << ")";
            break;
        case Kind::general:
            os << "general(C=" << growth_constant << ")";
            break;
    }
    return os.str();
}

bool PhysicsParams::mass_critical() const { return std::abs(p - critical_power()) < 1e-12; }

double PhysicsParams::G(double r, double v) const {
    if (nonlinearity.kind == NonlinearityModel::Kind::general) return nonlinearity.G(v);
    const double lam = nonlinearity.coefficient(r);
    if (lam == 0.0 || v <= 0.0) return 0.0;
    return 2.0 * lam / (p + 1.0) * std::pow(v, 0.5 * (p + 1.0));
}

double PhysicsParams::G_prime(double r, double v) const {
    if (nonlinearity.kind == NonlinearityModel::Kind::general) return nonlinearity.G_prime(v);
    const double lam = nonlinearity.coefficient(r);
    if (lam == 0.0) return 0.0;
    if (p == 3.0) return lam * v;
    if (v <= 0.0) return p == 1.0 ? lam : 0.0;
    return lam * std::pow(v, 0.5 * (p - 1.0));
}

std::string check_coefficient_hypothesis(const NonlinearityModel& model, double radius) {
    if (model.kind != NonlinearityModel::Kind::inhomogeneous) return {};
    constexpr int samples = 4096;
    for (int i = 0; i <= samples; ++i) {
        const double r = radius * i / samples;
        const double lam = model.coefficient(r);
        if (!(lam > 0.0) || !std::isfinite(lam)) return "lambda(x) must be positive and bounded (r=" + std::to_string(r) + ")";
        if (r * model.coefficient_slope(r) > 1e-14) return "x.grad lambda must be <= 0 (r=" + std::to_string(r) + ")";
    }
    return {};
}

std::string check_growth_hypothesis(const NonlinearityModel& model, double p) {
    if (model.kind != NonlinearityModel::Kind::general) return {};
    if (!model.G || !model.G_prime) return "general nonlinearity needs both G and G'";
    if (!(model.growth_constant > 0.0)) return "general nonlinearity needs a growth constant C > 0";
    for (int i = -160; i <= 80; ++i) {
        const double v = std::pow(10.0, i / 20.0);
        const double g = model.G(v);
        const double bound = model.growth_constant * (v + std::pow(v, 0.5 * (p + 1.0)));
        if (!(g >= 0.0) || g > bound * (1.0 + 1e-12))
            return "G(v) violates 0 <= G <= C(v + v^((p+1)/2)) at v=" + std::to_string(v);
    }
    return {};
}

void PhysicsParams::validate() const {
    if (n != 2 && n != 3) throw ConfigError("dimension n must be 2 or 3");
    if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0");
    if (!std::isfinite(Omega)) throw ConfigError("Omega must be finite");
    if (!(p >= 1.0)) throw ConfigError("nonlinearity power p must be >= 1");
    if (n == 3 && !(p < 5.0)) throw ConfigError("p must be < 1 + 4/(n-2) = 5 for n = 3");
    if (kappa != 1 && kappa != -1) throw ConfigError("kappa must be +1 or -1");
    if (nonlinearity.kind == NonlinearityModel::Kind::power && !(nonlinearity.lambda >= 0.0))
        throw ConfigError("lambda must be >= 0");
    if (auto msg = check_coefficient_hypothesis(nonlinearity, 64.0); !msg.empty()) throw ConfigError(msg);
    if (auto msg = check_growth_hypothesis(nonlinearity, p); !msg.empty()) throw ConfigError(msg);
}

OperatorSet::OperatorSet(const GridSpec& grid, const PhysicsParams& params) : grid_(grid), params_(params) {
    params_.validate();
    if (params_.n != grid.dim()) throw ConfigError("physics dimension does not match grid dimension");
    const std::size_t N = grid.size();
    kinetic_.resize(N);
    potential_.resize(N);
    effective_.resize(N);
    lambda_.resize(N);
    x_dot_grad_lambda_.resize(N);
    radius_.resize(N);
    const double g2 = params_.gamma * params_.gamma;
    const double w2 = params_.Omega * params_.Omega;
    for (std::size_t idx = 0; idx < N; ++idx) {
        const auto ijk = grid.unflatten(idx);
        double k2 = 0.0, r2 = 0.0, planar = 0.0;
        for (int a = 0; a < grid.dim(); ++a) {
            const double k = grid.wavenumber(a, ijk[a]);
            const double x = grid.coordinate(a, ijk[a]);
            k2 += k * k;
            r2 += x * x;
            if (a < 2) planar += x * x;
        }
        const double r = std::sqrt(r2);
        kinetic_[idx] = 0.5 * k2;
        potential_[idx] = 0.5 * g2 * r2;
        effective_[idx] = potential_[idx] - 0.5 * w2 * planar;
        lambda_[idx] = params_.nonlinearity.coefficient(r);
        x_dot_grad_lambda_[idx] = r * params_.nonlinearity.coefficient_slope(r);
        radius_[idx] = r;
    }
}

WaveField OperatorSet::apply_kinetic(const WaveField& u) const {
    require_same_grid(u.grid, grid_);
    WaveField out = u;
    forward_all(out.values, grid_);
    for_each_index(out.size(), Exec::parallel, [&](std::size_t i) { out.values[i] *= kinetic_[i]; });
    inverse_all(out.values, grid_);
    return out;
}

WaveField OperatorSet::apply_potential(const WaveField& u) const {
    require_same_grid(u.grid, grid_);
    WaveField out = u;
    for_each_index(out.size(), Exec::parallel, [&](std::size_t i) { out.values[i] *= potential_[i]; });
    return out;
}

WaveField OperatorSet::apply_Lz(const WaveField& u) const {
    require_same_grid(u.grid, grid_);
    const WaveField d1 = derivative(u, 0);
    const WaveField d2 = derivative(u, 1);
    WaveField out(grid_);
    for_each_index(out.size(), Exec::parallel, [&](std::size_t i) {
        const auto ijk = grid_.unflatten(i);
        const double x1 = grid_.coordinate(0, ijk[0]);
        const double x2 = grid_.coordinate(1, ijk[1]);
        out.values[i] = cplx{0.0, 1.0} * (x2 * d1.values[i] - x1 * d2.values[i]);
    });
    return out;
}

WaveField OperatorSet::apply_nonlinearity(const WaveField& u) const {
    require_same_grid(u.grid, grid_);
    WaveField out = u;
    for_each_index(out.size(), Exec::parallel, [&](std::size_t i) {
        out.values[i] *= params_.G_prime(radius_[i], std::norm(u.values[i]));
    });
    return out;
}

WaveField OperatorSet::apply_hamiltonian(const WaveField& u) const {
    WaveField out = apply_kinetic(u);
    for_each_index(out.size(), Exec::parallel, [&](std::size_t i) { out.values[i] += potential_[i] * u.values[i]; });
    if (params_.Omega != 0.0) {
        const WaveField lz = apply_Lz(u);
        for_each_index(out.size(), Exec::parallel,
                       [&](std::size_t i) { out.values[i] -= params_.Omega * lz.values[i]; });
    }
    return out;
}

std::vector<WaveField> OperatorSet::magnetic_gradient(const WaveField& u) const {
    std::vector<WaveField> g = gradient(u);
    const double W = params_.Omega;
    for_each_index(u.size(), Exec::parallel, [&](std::size_t i) {
        const auto ijk = grid_.unflatten(i);
        const double x1 = grid_.coordinate(0, ijk[0]);
        const double x2 = grid_.coordinate(1, ijk[1]);
        const cplx iu = cplx{0.0, 1.0} * u.values[i];
        g[0].values[i] -= (-W * x2) * iu;
        g[1].values[i] -= (W * x1) * iu;
    });
    return g;
}

WaveField OperatorSet::apply_magnetic_form(const WaveField& u) const {
    const std::vector<WaveField> w = magnetic_gradient(u);
    WaveField out(grid_);
    const double W = params_.Omega;
    for (int a = 0; a < grid_.dim(); ++a) {
        const WaveField dw = derivative(w[a], a);
        for_each_index(out.size(), Exec::parallel, [&](std::size_t i) {
            const auto ijk = grid_.unflatten(i);
            double A = 0.0;
            if (a == 0) A = -W * grid_.coordinate(1, ijk[1]);
            if (a == 1) A = W * grid_.coordinate(0, ijk[0]);
            const cplx second = dw.values[i] - cplx{0.0, A} * w[a].values[i];
            out.values[i] -= 0.5 * second;
        });
    }
    for_each_index(out.size(), Exec::parallel, [&](std::size_t i) { out.values[i] += effective_[i] * u.values[i]; });
    return out;
}

std::vector<WaveField> gradient(const WaveField& u) {
    std::vector<WaveField> g;
    g.reserve(static_cast<std::size_t>(u.grid.dim()));
    for (int a = 0; a < u.grid.dim(); ++a) g.push_back(derivative(u, a));
    return g;
}

}  // namespace rnls
