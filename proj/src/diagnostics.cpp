#include "rnls/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rnls/kernels.hpp"
#include "rnls/spectral.hpp"

namespace rnls {

using kernels::Exec;

namespace {

template <std::size_t K>
struct Sums {
    std::array<double, K> v{};
    Sums& operator+=(const Sums& o) {
        for (std::size_t i = 0; i < K; ++i) v[i] += o.v[i];
        return *this;
    }
};

// Spectral gradient of u, one field per axis.
std::vector<std::vector<cplx>> spectral_gradient(const std::vector<cplx>& uh, const GridSpec& g) {
    std::vector<std::vector<cplx>> grad(static_cast<std::size_t>(g.dim()));
    for (int a = 0; a < g.dim(); ++a) {
        std::vector<cplx> d = uh;
        const std::size_t stride = g.stride(a), n = g.points(a);
        kernels::for_each_index(d.size(), Exec::parallel, [&](std::size_t i) {
            const std::size_t m = (i / stride) % n;
            d[i] *= cplx{0.0, derivative_wavenumber(g, a, m)};
        });
        inverse_all(d, g);
        grad[static_cast<std::size_t>(a)] = std::move(d);
    }
    return grad;
}

double full_k2(const GridSpec& g, std::size_t i) {
    const auto ijk = g.unflatten(i);
    double k2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
        const double k = g.wavenumber(a, ijk[a]);
        k2 += k * k;
    }
    return k2;
}

double tail_from_coefficients(const std::vector<cplx>& uh, const GridSpec& g) {
    const double total = kernels::reduce<double>(uh.size(), Exec::parallel, [&](std::size_t i) { return std::norm(uh[i]); });
    if (total == 0.0) return 0.0;
    double worst = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
        const double cut = (2.0 / 3.0) * g.max_wavenumber(a);
        const std::size_t stride = g.stride(a), n = g.points(a);
        const double hi = kernels::reduce<double>(uh.size(), Exec::parallel, [&](std::size_t i) {
            const std::size_t m = (i / stride) % n;
            return std::abs(g.wavenumber(a, m)) > cut ? std::norm(uh[i]) : 0.0;
        });
        worst = std::max(worst, hi / total);
    }
    return worst;
}

}  // namespace

const std::array<const char*, 15>& DiagnosticsRecord::column_names() {
    static const std::array<const char*, 15> names{
        "t",     "mass", "kinetic", "trap", "interaction", "angular",    "energy",        "free_energy",
        "J",     "dJ",   "virial_residual", "grad_norm", "sigma_norm", "boundary_mass", "tail_fraction"};
    return names;
}

std::array<double, 15> DiagnosticsRecord::row() const {
    return {t, mass, kinetic, trap, interaction, angular, energy, free_energy,
            J, dJ, virial_residual, grad_norm, sigma_norm, boundary_mass, tail_fraction};
}

DiagnosticsRecord DiagnosticsRecord::from_row(const std::array<double, 15>& r) {
    DiagnosticsRecord d;
    d.t = r[0];
    d.mass = r[1];
    d.kinetic = r[2];
    d.trap = r[3];
    d.interaction = r[4];
    d.angular = r[5];
    d.energy = r[6];
    d.free_energy = r[7];
    d.J = r[8];
    d.dJ = r[9];
    d.virial_residual = r[10];
    d.grad_norm = r[11];
    d.sigma_norm = r[12];
    d.boundary_mass = r[13];
    d.tail_fraction = r[14];
    return d;
}

DiagnosticsRecord record(const WaveField& u, const OperatorSet& ops, double t) {
    const GridSpec& g = u.grid;
    require_same_grid(g, ops.grid());
    const PhysicsParams& prm = ops.params();
    std::vector<cplx> uh = u.values;
    forward_all(uh, g);
    const double w = parseval_weight(g);
    const auto kin = ops.kinetic_multiplier();

    DiagnosticsRecord r;
    r.t = t;
    r.kinetic = w * kernels::reduce<double>(uh.size(), Exec::parallel,
                                            [&](std::size_t i) { return 2.0 * kin[i] * std::norm(uh[i]); });
    r.tail_fraction = tail_from_coefficients(uh, g);
    const auto grad = spectral_gradient(uh, g);

    const auto V = ops.potential();
    const auto lam = ops.coefficient();
    const auto xgl = ops.coefficient_radial_slope();
    const bool power = prm.nonlinearity.is_power_law();
    const double half_p1 = 0.5 * (prm.p + 1.0);
    const int dim = g.dim();

    // 0 mass, 1 trap, 2 J, 3 G, 4 lambda|u|^{p+1}, 5 x.grad lambda |u|^{p+1}, 6 Re lz, 7 Im lz, 8 x.ubar grad u (Im)
    using S = Sums<9>;
    const S s = kernels::reduce<S>(u.size(), Exec::parallel, [&](std::size_t i) {
        S out;
        const auto ijk = g.unflatten(i);
        std::array<double, 3> x{0.0, 0.0, 0.0};
        double r2 = 0.0;
        for (int a = 0; a < dim; ++a) {
            x[a] = g.coordinate(a, ijk[a]);
            r2 += x[a] * x[a];
        }
        const cplx ui = u.values[i];
        const double v = std::norm(ui);
        out.v[0] = v;
        out.v[1] = V[i] * v;
        out.v[2] = r2 * v;
        if (power) {
            const double lpp = v > 0.0 ? std::pow(v, half_p1) : 0.0;
            out.v[3] = lam[i] == 0.0 ? 0.0 : 2.0 * lam[i] / (prm.p + 1.0) * lpp;
            out.v[4] = lam[i] * lpp;
            out.v[5] = xgl[i] * lpp;
        } else {
            out.v[3] = prm.nonlinearity.G(v);
        }
        const cplx lz = std::conj(ui) * cplx{0.0, 1.0} * (x[1] * grad[0][i] - x[0] * grad[1][i]);
        out.v[6] = lz.real();
        out.v[7] = lz.imag();
        cplx xg{0.0, 0.0};
        for (int a = 0; a < dim; ++a) xg += x[a] * grad[static_cast<std::size_t>(a)][i];
        out.v[8] = (std::conj(ui) * xg).imag();
        return out;
    });
    const double cv = g.cell_volume();
    r.mass = cv * s.v[0];
    r.trap = cv * s.v[1];
    r.J = cv * s.v[2];
    r.interaction = cv * s.v[3];
    r.weighted_lpp = cv * s.v[4];
    r.slope_lpp = cv * s.v[5];
    r.lz_expectation = cv * s.v[6];
    r.lz_imaginary = cv * s.v[7];
    r.dJ = 2.0 * cv * s.v[8];
    r.angular = -prm.Omega * r.lz_expectation;
    r.free_energy = 0.5 * r.kinetic - prm.kappa * r.interaction;
    r.energy = r.free_energy + r.trap + r.angular;
    r.grad_norm = std::sqrt(r.kinetic);
    r.sigma_norm = std::sqrt(r.kinetic + r.J + r.mass);
    r.boundary_mass = boundary_mass_fraction(u);
    return r;
}

double spectral_tail_fraction(const WaveField& u) {
    std::vector<cplx> uh = u.values;
    forward_all(uh, u.grid);
    return tail_from_coefficients(uh, u.grid);
}

double variance_prime(const WaveField& u) {
    const GridSpec& g = u.grid;
    std::vector<cplx> uh = u.values;
    forward_all(uh, g);
    const auto grad = spectral_gradient(uh, g);
    const double s = kernels::reduce<double>(u.size(), Exec::parallel, [&](std::size_t i) {
        const auto ijk = g.unflatten(i);
        cplx xg{0.0, 0.0};
        for (int a = 0; a < g.dim(); ++a) xg += g.coordinate(a, ijk[a]) * grad[static_cast<std::size_t>(a)][i];
        return (std::conj(u.values[i]) * xg).imag();
    });
    return 2.0 * g.cell_volume() * s;
}

double virial_source(const DiagnosticsRecord& r, const PhysicsParams& prm) {
    if (!prm.nonlinearity.is_power_law()) throw ConfigError("virial identity needs a power-law nonlinearity");
    return prm.kappa * 4.0 / (prm.p + 1.0) * r.slope_lpp;
}

double virial_rhs(const DiagnosticsRecord& r, const PhysicsParams& prm) {
    if (!prm.nonlinearity.is_power_law()) throw ConfigError("virial identity needs a power-law nonlinearity");
    const double g2 = prm.gamma * prm.gamma;
    const double n = prm.n;
    return 4.0 * r.energy - 4.0 * g2 * r.J +
           prm.kappa * 2.0 / (prm.p + 1.0) * (4.0 - n * (prm.p - 1.0)) * r.weighted_lpp - 4.0 * r.angular +
           virial_source(r, prm);
}

double virial_rhs(const WaveField& u, const OperatorSet& ops) { return virial_rhs(record(u, ops), ops.params()); }

RadialWeight RadialWeight::square() {
    return {[](double r) { return std::array<double, 5>{r * r, 2.0 * r, 2.0, 0.0, 0.0}; }};
}

RadialWeight RadialWeight::constant(double value) {
    return {[value](double) { return std::array<double, 5>{value, 0.0, 0.0, 0.0, 0.0}; }};
}

RadialWeight RadialWeight::saturating(double R) {
    return {[R](double r) {
        const double R2 = R * R;
        const double s = r * r / R2;
        const double e = std::exp(-s);
        return std::array<double, 5>{R2 * (1.0 - e), 2.0 * r * e, e * (2.0 - 4.0 * s), -(2.0 * r / R2) * e * (6.0 - 4.0 * s),
                                     (2.0 * e / R2) * (-6.0 + 24.0 * s - 8.0 * s * s)};
    }};
}

double localized_variance(const WaveField& u, const RadialWeight& rho) {
    const GridSpec& g = u.grid;
    const double s = kernels::reduce<double>(u.size(), Exec::parallel, [&](std::size_t i) {
        return rho.derivatives(std::sqrt(g.radius_squared(i)))[0] * std::norm(u.values[i]);
    });
    return g.cell_volume() * s;
}

double localized_virial_rhs(const WaveField& u, const OperatorSet& ops, const RadialWeight& rho) {
    const auto d0 = rho.derivatives(0.0);
    const double scale = std::abs(d0[0]) + std::abs(d0[2]) + std::abs(d0[4]) + 1.0;
    if (std::abs(d0[1]) > 1e-12 * scale || std::abs(d0[3]) > 1e-12 * scale)
        throw ConfigError("weight must be smooth and radial: odd derivatives at r = 0 must vanish");
    const GridSpec& g = u.grid;
    require_same_grid(g, ops.grid());
    const PhysicsParams& prm = ops.params();
    if (!prm.nonlinearity.is_power_law()) throw ConfigError("localized virial needs a power-law nonlinearity");
    std::vector<cplx> uh = u.values;
    forward_all(uh, g);
    const auto grad = spectral_gradient(uh, g);
    const auto lam = ops.coefficient();
    const auto xgl = ops.coefficient_radial_slope();
    const double n = g.dim();
    const double p = prm.p;
    const double g2 = prm.gamma * prm.gamma;
    const double kappa = prm.kappa;

    const double s = kernels::reduce<double>(u.size(), Exec::parallel, [&](std::size_t i) {
        const auto ijk = g.unflatten(i);
        std::array<double, 3> x{0.0, 0.0, 0.0};
        double r2 = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            x[a] = g.coordinate(a, ijk[a]);
            r2 += x[a] * x[a];
        }
        const double r = std::sqrt(r2);
        const auto d = rho.derivatives(r);
        double lap, bilap, drho_over_r, x_grad_rho;
        if (r < 1e-12) {
            drho_over_r = d[2];
            lap = n * d[2];
            bilap = n * (n + 2.0) * d[4] / 3.0;
            x_grad_rho = 0.0;
        } else {
            drho_over_r = d[1] / r;
            lap = d[2] + (n - 1.0) * d[1] / r;
            const double q1 = d[3] + (n - 1.0) * (d[2] / r - d[1] / r2);
            const double q2 = d[4] + (n - 1.0) * (d[3] / r - 2.0 * d[2] / r2 + 2.0 * d[1] / (r2 * r));
            bilap = q2 + (n - 1.0) * q1 / r;
            x_grad_rho = r * d[1];
        }
        double grad2 = 0.0;
        cplx radial{0.0, 0.0};
        for (int a = 0; a < g.dim(); ++a) {
            const cplx ga = grad[static_cast<std::size_t>(a)][i];
            grad2 += std::norm(ga);
            if (r >= 1e-12) radial += (x[a] / r) * ga;
        }
        const double hess = drho_over_r * grad2 + (d[2] - drho_over_r) * std::norm(radial);
        const double v = std::norm(u.values[i]);
        const double lpp = v > 0.0 ? std::pow(v, 0.5 * (p + 1.0)) : 0.0;
        // grad lambda . grad rho = lambda'(r) rho'(r) = (x.grad lambda) rho' / r
        const double glgr = r < 1e-12 ? 0.0 : xgl[i] * d[1] / r;
        return -0.25 * bilap * v - kappa * (p - 1.0) / (p + 1.0) * lam[i] * lap * lpp + hess - g2 * x_grad_rho * v +
               kappa * 2.0 / (p + 1.0) * glgr * lpp;
    });
    return g.cell_volume() * s;
}

double ClosedFormVariance::operator()(double t) const { return C * std::sin(2.0 * gamma * t + beta) + D; }
double ClosedFormVariance::derivative(double t) const { return 2.0 * gamma * C * std::cos(2.0 * gamma * t + beta); }
double ClosedFormVariance::second_derivative(double t) const {
    return -4.0 * gamma * gamma * C * std::sin(2.0 * gamma * t + beta);
}

ClosedFormVariance closed_form_variance(double J0, double dJ0, double E, double l, double gamma) {
    if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0");
    ClosedFormVariance cf;
    cf.gamma = gamma;
    cf.D = (E - l) / (gamma * gamma);
    const double A = J0 - cf.D;
    const double B = dJ0 / (2.0 * gamma);
    cf.C = std::hypot(A, B);
    cf.beta = std::atan2(A, B);
    if (cf.C == 0.0 || cf.C < std::abs(cf.D) * (1.0 - 1e-9)) return cf;
    const double ratio = std::clamp(-cf.D / cf.C, -1.0, 1.0);
    const double a = std::asin(ratio);
    const double two_pi = 2.0 * std::numbers::pi;
    double best = std::numeric_limits<double>::infinity();
    for (int k = -1; k <= 2; ++k) {
        for (double phi : {a + two_pi * k, std::numbers::pi - a + two_pi * k}) {
            if (phi > cf.beta + 1e-14 && phi < best) best = phi;
        }
    }
    cf.first_zero = (best - cf.beta) / (2.0 * gamma);
    return cf;
}

std::string to_string(BlowupCondition c) {
    switch (c) {
        case BlowupCondition::a: return "a";
        case BlowupCondition::b: return "b";
        case BlowupCondition::c: return "c";
        case BlowupCondition::d: return "d";
        case BlowupCondition::none: return "none";
    }
    return "none";
}

BlowupVerdict classify_blowup(const DiagnosticsRecord& r0, const PhysicsParams& prm, double tolerance) {
    BlowupVerdict v;
    const double g = prm.gamma;
    v.E_minus_l = r0.energy - r0.angular;
    v.variance = closed_form_variance(r0.J, r0.dJ, r0.energy, r0.angular, g);
    const double slack = tolerance * (0.5 * r0.kinetic + r0.trap + std::abs(r0.interaction) + std::abs(r0.angular));
    const double EL = v.E_minus_l;
    const double pi = std::numbers::pi;
    if (prm.mass_critical()) {
        if (EL <= 0.5 * g * g * r0.J + slack) {
            v.condition = BlowupCondition::a;
        } else if (EL <= 0.5 * g * std::abs(r0.dJ) + slack) {
            v.condition = BlowupCondition::b;
        }
        if (v.condition != BlowupCondition::none) {
            v.window_lo = pi / (4.0 * g);
            const bool still = std::abs(r0.dJ) <= tolerance * g * r0.J;
            v.window_hi = still ? pi / (2.0 * g) : 3.0 * pi / (4.0 * g);
        }
        return v;
    }
    if (prm.p > prm.critical_power()) {
        if (EL < 0.0 && std::abs(EL) > slack) {
            v.condition = BlowupCondition::c;
        } else if (std::abs(EL) <= slack && r0.dJ < 0.0) {
            v.condition = BlowupCondition::d;
        }
        if (v.condition != BlowupCondition::none) {
            const double a = 2.0 * EL, b = r0.dJ, c = r0.J;
            double root;
            if (v.condition == BlowupCondition::d || a == 0.0)
                root = -c / b;
            else
                root = (-b - std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
            v.quadratic_root = root;
            v.window_lo = 0.0;
            v.window_hi = root;
        }
    }
    return v;
}

double uncertainty_ratio(const WaveField& u) {
    const GridSpec& g = u.grid;
    std::vector<cplx> uh = u.values;
    forward_all(uh, g);
    const double K = parseval_weight(g) * kernels::reduce<double>(uh.size(), Exec::parallel, [&](std::size_t i) {
                         return full_k2(g, i) * std::norm(uh[i]);
                     });
    const double J = g.cell_volume() * kernels::reduce<double>(u.size(), Exec::parallel, [&](std::size_t i) {
                         return g.radius_squared(i) * std::norm(u.values[i]);
                     });
    const double M = mass(u);
    return 2.0 / g.dim() * K * J / (M * M);
}

DuhamelReport duhamel_variance_bound(const std::vector<DiagnosticsRecord>& series, const PhysicsParams& prm) {
    if (series.empty()) throw ConfigError("empty diagnostics series");
    DuhamelReport rep;
    const DiagnosticsRecord& r0 = series.front();
    const auto cf = closed_form_variance(r0.J, r0.dJ, r0.energy, r0.angular, prm.gamma);
    const double two_g = 2.0 * prm.gamma;
    std::vector<double> f(series.size());
    for (std::size_t k = 0; k < series.size(); ++k) f[k] = virial_source(series[k], prm);
    rep.min_slack = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < series.size(); ++k) {
        const double t = series[k].t - r0.t;
        double integral = 0.0;
        for (std::size_t j = 1; j <= k; ++j) {
            const double s0 = series[j - 1].t - r0.t, s1 = series[j].t - r0.t;
            const double h0 = std::sin(two_g * (t - s0)) / two_g * f[j - 1];
            const double h1 = std::sin(two_g * (t - s1)) / two_g * f[j];
            integral += 0.5 * (s1 - s0) * (h0 + h1);
        }
        rep.t.push_back(series[k].t);
        rep.measured.push_back(series[k].J);
        rep.bound.push_back(cf(t));
        rep.reconstruction.push_back(cf(t) + integral);
        rep.min_slack = std::min(rep.min_slack, cf(t) - series[k].J);
        rep.max_reconstruction_error =
            std::max(rep.max_reconstruction_error, std::abs(cf(t) + integral - series[k].J) / r0.J);
    }
    return rep;
}

VirialTracker::VirialTracker(const DiagnosticsRecord& r0, const PhysicsParams& prm)
    : gamma_(prm.gamma), t0_(r0.t), J0_(r0.J), dJ0_(r0.dJ), EL_(r0.energy - r0.angular), kappa_(prm.kappa), p_(prm.p) {
    const auto& nl = prm.nonlinearity;
    const bool linear = nl.kind == NonlinearityModel::Kind::power && nl.lambda == 0.0;
    if (!nl.is_power_law())
        mode_ = none;
    else if (prm.mass_critical() || linear)
        mode_ = closed;
    else if (prm.p > prm.critical_power())
        mode_ = taylor;
    cf_ = closed_form_variance(J0_, dJ0_, r0.energy, r0.angular, gamma_);
}

double VirialTracker::residual(const DiagnosticsRecord& r) {
    const double tau = r.t - t0_;
    switch (mode_) {
        case taylor:
            return r.J - (J0_ + dJ0_ * tau + 2.0 * EL_ * tau * tau);
        case closed: {
            const double f = kappa_ * 4.0 / (p_ + 1.0) * r.slope_lpp;
            const double tg = 2.0 * gamma_;
            if (!started_) {
                started_ = true;
            } else {
                const double h = tau - last_t_;
                acc_cos_ += 0.5 * h * (std::cos(tg * last_t_) * last_f_ + std::cos(tg * tau) * f);
                acc_sin_ += 0.5 * h * (std::sin(tg * last_t_) * last_f_ + std::sin(tg * tau) * f);
            }
            last_t_ = tau;
            last_f_ = f;
            const double duhamel = (std::sin(tg * tau) * acc_cos_ - std::cos(tg * tau) * acc_sin_) / tg;
            return r.J - (cf_(tau) + duhamel);
        }
        default:
            return std::numeric_limits<double>::quiet_NaN();
    }
}

std::vector<double> VirialTracker::state() const {
    return {static_cast<double>(mode_), gamma_, t0_, J0_, dJ0_, EL_, cf_.C, cf_.beta, cf_.D,
            acc_cos_, acc_sin_, last_t_, last_f_, started_ ? 1.0 : 0.0, kappa_, p_};
}

void VirialTracker::restore(const std::vector<double>& s) {
    if (s.size() != 16) throw IoError("virial tracker state has wrong length");
    mode_ = static_cast<int>(s[0]);
    gamma_ = s[1];
    t0_ = s[2];
    J0_ = s[3];
    dJ0_ = s[4];
    EL_ = s[5];
    cf_ = ClosedFormVariance{};
    cf_.C = s[6];
    cf_.beta = s[7];
    cf_.D = s[8];
    cf_.gamma = gamma_;
    acc_cos_ = s[9];
    acc_sin_ = s[10];
    last_t_ = s[11];
    last_f_ = s[12];
    started_ = s[13] != 0.0;
    kappa_ = s[14];
    p_ = s[15];
}

double smoothed_second_derivative(const std::vector<double>& v, double h, std::size_t k, std::size_t m) {
    if (k < 2 * m || k + 2 * m >= v.size()) throw ConfigError("stencil exceeds series bounds");
    const double hm = h * static_cast<double>(m);
    const double d1 = (v[k + m] - 2.0 * v[k] + v[k - m]) / (hm * hm);
    const double d2 = (v[k + 2 * m] - 2.0 * v[k] + v[k - 2 * m]) / (4.0 * hm * hm);
    return (4.0 * d1 - d2) / 3.0;
}

}  // namespace rnls
