#include "rnls/groundstate.hpp"

#include <boost/math/special_functions/bessel.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "rnls/diagnostics.hpp"
#include "rnls/error.hpp"
#include "rnls/spectral.hpp"

namespace rnls {

using kernels::Exec;

namespace {

const double sqrt2 = std::numbers::sqrt2;

double sphere_area(int n) { return n == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi; }

// r^-nu K_nu(sqrt2 r) and its r-derivative -sqrt2 r^-nu K_{nu+1}(sqrt2 r).
double tail_shape(int n, double r) {
    const double nu = 0.5 * (n - 2);
    return std::pow(r, -nu) * boost::math::cyl_bessel_k(nu, sqrt2 * r);
}
double tail_shape_slope(int n, double r) {
    const double nu = 0.5 * (n - 2);
    return -sqrt2 * std::pow(r, -nu) * boost::math::cyl_bessel_k(nu + 1.0, sqrt2 * r);
}

// Composite Simpson rule on pairs of possibly unequal intervals.
double simpson(const std::vector<double>& x, const std::vector<double>& f) {
    double s = 0.0;
    std::size_t i = 0;
    for (; i + 2 < x.size(); i += 2) {
        const double h0 = x[i + 1] - x[i], h1 = x[i + 2] - x[i + 1];
        const double hs = h0 + h1;
        s += hs / 6.0 * ((2.0 - h1 / h0) * f[i] + hs * hs / (h0 * h1) * f[i + 1] + (2.0 - h0 / h1) * f[i + 2]);
    }
    if (i + 1 < x.size()) s += 0.5 * (x[i + 1] - x[i]) * (f[i] + f[i + 1]);
    return s;
}

// Derivative at x[k] of the Lagrange polynomial through x[lo..lo+4].
double lagrange_slope(const std::vector<double>& x, const std::vector<double>& f, std::size_t lo, std::size_t k) {
    double d = 0.0;
    for (std::size_t j = lo; j < lo + 5; ++j) {
        // l_j'(x_k)
        double lj = 0.0;
        if (j == k) {
            for (std::size_t m = lo; m < lo + 5; ++m)
                if (m != j) lj += 1.0 / (x[j] - x[m]);
        } else {
            double num = 1.0, den = 1.0;
            for (std::size_t m = lo; m < lo + 5; ++m) {
                if (m == j) continue;
                den *= x[j] - x[m];
                if (m != k) num *= x[k] - x[m];
            }
            lj = num / den;
        }
        d += lj * f[j];
    }
    return d;
}

double five_point_slope(const std::vector<double>& x, const std::vector<double>& f, std::size_t k) {
    const std::size_t n = x.size();
    const std::size_t lo = k < 2 ? 0 : (k + 3 > n ? n - 5 : k - 2);
    return lagrange_slope(x, f, lo, k);
}

struct Shot {
    enum Outcome { over, under, neither } outcome = neither;
    std::vector<double> q, dq;  // up to (excluding) the event node
};

// Q'' = 2Q - 2 lambda Q^p - (n-1) Q'/r
struct RadialOde {
    double p, lambda;
    int n;
    double accel(double r, double y, double dy) const {
        const double ay = std::abs(y);
        const double nl = p == 3.0 ? ay * ay * y : std::copysign(std::pow(ay, p), y);
        return 2.0 * y - 2.0 * lambda * nl - (n - 1.0) * dy / r;
    }
    void rk4(double r, double h, double& y, double& dy) const {
        const double k1y = dy, k1d = accel(r, y, dy);
        const double k2y = dy + 0.5 * h * k1d, k2d = accel(r + 0.5 * h, y + 0.5 * h * k1y, dy + 0.5 * h * k1d);
        const double k3y = dy + 0.5 * h * k2d, k3d = accel(r + 0.5 * h, y + 0.5 * h * k2y, dy + 0.5 * h * k2d);
        const double k4y = dy + h * k3d, k4d = accel(r + h, y + h * k3y, dy + h * k3d);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        dy += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
    }
};

// Outward RK4 from a series near r = 0, stopped when Q crosses zero or turns up.
Shot shoot(double q0, double p, double lambda, int n, const std::vector<double>& r) {
    Shot s;
    s.q.reserve(r.size());
    s.dq.reserve(r.size());
    const RadialOde ode{p, lambda, n};
    // Near the origin, where the (n-1)/r term makes explicit steps inaccurate,
    // use the power series Q = sum c_k r^{2k}: Lap r^{2k} = 2k(2k+n-2) r^{2k-2},
    // and w = Q^p follows Miller's recurrence.
    constexpr int terms = 24;
    std::array<double, terms> c{}, w{};
    c[0] = q0;
    w[0] = std::pow(q0, p);
    for (int k = 0; k + 1 < terms; ++k) {
        if (k > 0) {
            double acc = 0.0;
            for (int j = 1; j <= k; ++j) acc += ((p + 1.0) * j - k) * c[j] * w[k - j];
            w[k] = acc / (k * q0);
        }
        c[k + 1] = (2.0 * c[k] - 2.0 * lambda * w[k]) / (2.0 * (k + 1) * (2.0 * k + n));
    }
    std::size_t start = 0;
    while (start + 1 < r.size()) {
        const double x = r[start], x2 = x * x;
        if (start > 0 && std::abs(c[terms - 1]) * std::pow(x2, terms - 1) > 1e-17 * q0) break;
        double v = 0.0, dv = 0.0;
        for (int k = terms - 1; k >= 0; --k) {
            v = v * x2 + c[k];
            if (k > 0) dv = dv * x2 + 2.0 * k * c[k];
        }
        s.q.push_back(v);
        s.dq.push_back(dv * x);
        ++start;
    }
    double y = s.q.back(), dy = s.dq.back();
    for (std::size_t i = start - 1; i + 1 < r.size(); ++i) {
        ode.rk4(r[i], r[i + 1] - r[i], y, dy);
        if (y < 0.0) {
            s.outcome = Shot::over;
            return s;
        }
        if (dy > 0.0) {
            s.outcome = Shot::under;
            return s;
        }
        s.q.push_back(y);
        s.dq.push_back(dy);
    }
    return s;
}

std::vector<double> graded_mesh(double r_max, std::size_t intervals) {
    constexpr double beta = 2.0;
    std::vector<double> r(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i)
        r[i] = r_max * std::sinh(beta * static_cast<double>(i) / static_cast<double>(intervals)) / std::sinh(beta);
    return r;
}

}  // namespace

double RadialProfile::value(double radius) const {
    radius = std::abs(radius);
    if (radius >= r.back()) return tail_amplitude * tail_shape(n, radius);
    const auto it = std::upper_bound(r.begin(), r.end(), radius);
    const std::size_t i = static_cast<std::size_t>(it - r.begin()) - 1;
    const double h = r[i + 1] - r[i];
    const double t = (radius - r[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * q[i] + (t3 - 2 * t2 + t) * h * dq[i] + (-2 * t3 + 3 * t2) * q[i + 1] +
           (t3 - t2) * h * dq[i + 1];
}

double RadialProfile::slope(double radius) const {
    const double sgn = radius < 0.0 ? -1.0 : 1.0;
    radius = std::abs(radius);
    if (radius >= r.back()) return sgn * tail_amplitude * tail_shape_slope(n, radius);
    const auto it = std::upper_bound(r.begin(), r.end(), radius);
    const std::size_t i = static_cast<std::size_t>(it - r.begin()) - 1;
    const double h = r[i + 1] - r[i];
    const double t = (radius - r[i]) / h;
    const double t2 = t * t;
    return sgn * ((6 * t2 - 6 * t) * q[i] / h + (3 * t2 - 4 * t + 1) * dq[i] + (-6 * t2 + 6 * t) * q[i + 1] / h +
                  (3 * t2 - 2 * t) * dq[i + 1]);
}

void RadialProfile::update_integrals() {
    const double area = sphere_area(n);
    std::vector<double> fm(r.size()), fk(r.size()), fp(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double w = std::pow(r[i], n - 1);
        fm[i] = w * q[i] * q[i];
        fk[i] = w * dq[i] * dq[i];
        fp[i] = w * std::pow(std::abs(q[i]), p + 1.0);
    }
    mass = area * simpson(r, fm);
    kinetic = area * simpson(r, fk);
    lpp = area * simpson(r, fp);
}

double RadialProfile::ode_residual() const {
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < r.size(); ++i) {
        const double d2 = five_point_slope(r, dq, i);
        const double res = d2 + (n - 1.0) * dq[i] / r[i] - 2.0 * q[i] + 2.0 * lambda * std::pow(q[i], p);
        worst = std::max(worst, std::abs(res));
    }
    return worst;
}

static RadialProfile solve_Q_fixed_mesh(double p, double lambda, int n, const ShootingOptions& opt) {
    if (n != 2 && n != 3) throw ConfigError("profile dimension must be 2 or 3");
    if (!(p > 1.0) || (n == 3 && !(p < 5.0))) throw ConfigError("need 1 < p < 1 + 4/(n-2)");
    if (!(lambda > 0.0)) throw ConfigError("need lambda > 0");
    std::size_t intervals = std::max<std::size_t>(opt.nodes, 16);
    intervals += intervals % 2;

    const double equilibrium = std::pow(lambda, -1.0 / (p - 1.0));
    double r_max = opt.r_max;
    for (int extension = 0; extension < 8; ++extension, r_max += 4.0) {
        const std::vector<double> r = graded_mesh(r_max, intervals);
        double lo = opt.q0_lo.value_or(equilibrium);
        double hi = opt.q0_hi.value_or(2.0 * equilibrium);
        if (shoot(lo, p, lambda, n, r).outcome == Shot::over)
            throw NumericalError("bracket-not-found: Q(0) = " + std::to_string(lo) + " already crosses zero");
        if (opt.q0_hi) {
            if (shoot(hi, p, lambda, n, r).outcome != Shot::over)
                throw NumericalError("bracket-not-found: Q(0) = " + std::to_string(hi) + " does not cross zero");
        } else {
            int tries = 0;
            while (shoot(hi, p, lambda, n, r).outcome != Shot::over) {
                lo = hi;
                hi *= 1.5;
                if (++tries > 60) throw NumericalError("bracket-not-found for Q(0)");
            }
        }
        int it = 0;
        const double tol = std::max(opt.tol, 4.0 * std::numeric_limits<double>::epsilon());
        while (hi - lo > tol * hi) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (shoot(mid, p, lambda, n, r).outcome == Shot::over)
                hi = mid;
            else
                lo = mid;
            if (++it > opt.max_bisections) throw NumericalError("shooting did not converge");
        }
        // The outward solution is trustworthy only until the growing mode takes
        // over, so the decaying tail is integrated inward from r_max (stable in
        // that direction) starting from A r^-nu K_nu(sqrt2 r), and (Q(0), A) are
        // fixed by Newton so that value and slope agree at a node where Q ~ Q(0)/100.
        const Shot a = shoot(lo, p, lambda, n, r);
        std::size_t m = 1;
        while (m + 1 < a.q.size() && a.q[m] > 1e-2 * lo) ++m;
        if (m + 1 >= a.q.size()) throw NumericalError("shooting branch ends before the matching radius");
        const std::vector<double> inner_mesh(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(m + 1));
        const RadialOde ode{p, lambda, n};
        auto inward = [&](double A, std::vector<double>* q, std::vector<double>* dq) {
            double y = A * tail_shape(n, r.back()), dy = A * tail_shape_slope(n, r.back());
            if (q) {
                q->assign(r.size(), 0.0);
                dq->assign(r.size(), 0.0);
                (*q)[r.size() - 1] = y;
                (*dq)[r.size() - 1] = dy;
            }
            for (std::size_t i = r.size() - 1; i > m; --i) {
                ode.rk4(r[i], r[i - 1] - r[i], y, dy);
                if (q) {
                    (*q)[i - 1] = y;
                    (*dq)[i - 1] = dy;
                }
            }
            return std::pair{y, dy};
        };
        auto mismatch = [&](double q0, double A) {
            const Shot o = shoot(q0, p, lambda, n, inner_mesh);
            if (o.q.size() != inner_mesh.size()) throw NumericalError("shooting branch ends before the matching radius");
            const auto [yi, dyi] = inward(A, nullptr, nullptr);
            return std::array<double, 2>{o.q.back() - yi, o.dq.back() - dyi};
        };
        double q0 = lo;
        double A = a.q[m] / inward(1.0, nullptr, nullptr).first;
        for (int newton = 0; newton < 20; ++newton) {
            const auto f = mismatch(q0, A);
            const double scale = std::abs(a.q[m]) + std::abs(a.dq[m]);
            if (std::abs(f[0]) + std::abs(f[1]) <= 1e-15 * scale) break;
            const double eq = 1e-7 * q0, ea = 1e-7 * A;
            const auto fq = mismatch(q0 + eq, A), fa = mismatch(q0, A + ea);
            const double j00 = (fq[0] - f[0]) / eq, j10 = (fq[1] - f[1]) / eq;
            const double j01 = (fa[0] - f[0]) / ea, j11 = (fa[1] - f[1]) / ea;
            const double det = j00 * j11 - j01 * j10;
            if (det == 0.0) throw NumericalError("singular matching system");
            const double dq0 = (f[0] * j11 - f[1] * j01) / det;
            const double dA = (j00 * f[1] - j10 * f[0]) / det;
            q0 -= dq0;
            A -= dA;
            if (std::abs(dq0) <= 1e-16 * q0 && std::abs(dA) <= 1e-16 * std::abs(A)) break;
        }

        RadialProfile prof;
        prof.p = p;
        prof.lambda = lambda;
        prof.n = n;
        prof.r = r;
        prof.bisections = it;
        prof.match_radius = r[m];
        prof.tail_amplitude = A;
        inward(A, &prof.q, &prof.dq);
        const Shot o = shoot(q0, p, lambda, n, inner_mesh);
        std::copy(o.q.begin(), o.q.end(), prof.q.begin());
        std::copy(o.dq.begin(), o.dq.end(), prof.dq.begin());
        for (std::size_t i = 1; i < prof.q.size(); ++i)
            if (!(prof.q[i] < prof.q[i - 1])) throw NumericalError("profile is not strictly decreasing");
        if (prof.q.back() >= 1e-10 * prof.q.front()) continue;
        prof.update_integrals();
        return prof;
    }
    throw NumericalError("profile tail did not decay below 1e-10 Q(0)");
}

RadialProfile solve_Q_radial(double p, double lambda, int n, const ShootingOptions& opt) {
    ShootingOptions o = opt;
    for (;;) {
        RadialProfile prof = solve_Q_fixed_mesh(p, lambda, n, o);
        if (prof.ode_residual() <= opt.residual_tol) return prof;
        if (2 * o.nodes > opt.max_nodes)
            throw NumericalError("profile residual " + std::to_string(prof.ode_residual()) + " above tolerance at " +
                                 std::to_string(o.nodes) + " nodes");
        o.nodes *= 2;
    }
}

double PohozaevResiduals::max() const {
    return std::max({std::abs(kinetic_vs_potential), std::abs(mass_vs_potential), std::abs(kinetic_vs_mass)});
}

PohozaevResiduals pohozaev_residuals(const RadialProfile& q) {
    const double a = 0.5, b = q.lambda, c = 1.0, p = q.p, n = q.n;
    const double K = q.kinetic, M = q.mass, P = q.lpp;
    PohozaevResiduals res;
    res.kinetic_vs_potential = (2 * a * K - b * n * (p - 1) / (p + 1) * P) / (2 * a * K);
    res.mass_vs_potential = (2 * c * M - b * (2 - n * (p - 1) / (p + 1)) * P) / (2 * c * M);
    res.kinetic_vs_mass = (a * (2 * (p + 1) / (n * (p - 1)) - 1) * K - c * M) / (c * M);
    return res;
}

GNConstant gn_constant(const RadialProfile& q) {
    const double s = 0.5 * (q.p - 1.0), n = q.n;
    GNConstant out;
    out.inverse_formula = q.lambda * std::pow(q.mass, s) / std::pow(2.0, 1.0 - s * n / 2.0) *
                          (2.0 - s * n / (s + 1.0)) * std::pow(s * n / (2.0 * s + 2.0 - s * n), s * n / 2.0);
    out.inverse_direct =
        std::pow(q.mass, 0.5 * (2.0 + 2.0 * s - n * s)) * std::pow(q.kinetic, 0.5 * n * s) / q.lpp;
    out.c_gn = 1.0 / out.inverse_formula;
    out.relative_gap = std::abs(out.inverse_formula - out.inverse_direct) / out.inverse_formula;
    return out;
}

WaveField lift_to_grid(const RadialProfile& prof, const GridSpec& g, double c, double alpha, double theta, double nu) {
    if (g.dim() != prof.n) throw ConfigError("grid dimension does not match the profile");
    if (!(alpha > 0.0)) throw ConfigError("scaling alpha must be > 0");
    const double amp = c * std::pow(alpha, 0.5 * prof.n);
    const cplx phase = std::polar(1.0, theta);
    WaveField u(g);
    kernels::for_each_index(u.size(), Exec::parallel, [&](std::size_t i) {
        const double r2 = g.radius_squared(i);
        u.values[i] = amp * prof.value(alpha * std::sqrt(r2)) * phase * std::polar(1.0, nu * r2);
    });
    if (c != 0.0) {
        if (spectral_tail_fraction(u) > 1e-8)
            throw ConfigError("grid does not resolve the lifted profile (spacing too coarse for alpha = " +
                              std::to_string(alpha) + ")");
        if (boundary_mass_fraction(u) > 1e-10) throw ConfigError("lifted profile reaches the box boundary");
    }
    return u;
}

void write_profile_table(std::ostream& os, const RadialProfile& q) {
    os << "# radial profile p " << std::setprecision(17) << q.p << " lambda " << q.lambda << " n " << q.n
       << " tail " << q.tail_amplitude << "\n";
    for (std::size_t i = 0; i < q.r.size(); ++i) os << q.r[i] << ' ' << q.q[i] << '\n';
}

RadialProfile read_profile_table(std::istream& is) {
    RadialProfile q;
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty profile table");
    {
        std::istringstream hs(line);
        std::string hash, w1, w2, kp, kl, kn, kt;
        hs >> hash >> w1 >> w2 >> kp >> q.p >> kl >> q.lambda >> kn >> q.n >> kt >> q.tail_amplitude;
        if (!hs || hash != "#" || kp != "p" || kl != "lambda" || kn != "n" || kt != "tail")
            throw IoError("malformed profile table header");
    }
    double rr, qq;
    while (is >> rr >> qq) {
        q.r.push_back(rr);
        q.q.push_back(qq);
    }
    if (!is.eof()) throw IoError("malformed profile table row");
    if (q.r.size() < 5) throw IoError("profile table too short");
    for (std::size_t i = 1; i < q.r.size(); ++i)
        if (!(q.r[i] > q.r[i - 1])) throw IoError("profile radii must increase");
    q.dq.resize(q.r.size());
    for (std::size_t i = 0; i < q.r.size(); ++i) q.dq[i] = five_point_slope(q.r, q.q, i);
    q.dq[0] = 0.0;
    q.update_integrals();
    return q;
}

double critical_mass(const PhysicsParams& prm) {
    double lam = 0.0;
    const auto& nl = prm.nonlinearity;
    switch (nl.kind) {
        case NonlinearityModel::Kind::power:
            lam = nl.lambda;
            break;
        case NonlinearityModel::Kind::inhomogeneous:
            lam = nl.coefficient_range(64.0).second;
            break;
        case NonlinearityModel::Kind::general:
            lam = (prm.n + 2.0) / prm.n * nl.growth_constant;
            break;
    }
    if (!(lam > 0.0)) return std::numeric_limits<double>::infinity();
    // ||Q_lambda||^2 = lambda^{-n/2} ||Q_1||^2 at p = 1 + 4/n.
    static const double unit2 = solve_Q_radial(3.0, 1.0, 2).mass;
    static const double unit3 = solve_Q_radial(7.0 / 3.0, 1.0, 3).mass;
    const double unit = prm.n == 2 ? unit2 : unit3;
    return std::sqrt(unit * std::pow(lam, -0.5 * prm.n));
}

namespace {

// (H - kappa N) u.
WaveField gradient_field(const OperatorSet& ops, const WaveField& u) {
    WaveField h = ops.apply_hamiltonian(u);
    const WaveField nl = ops.apply_nonlinearity(u);
    const double kappa = ops.params().kappa;
    for (std::size_t i = 0; i < h.size(); ++i) h.values[i] -= kappa * nl.values[i];
    return h;
}

double real_inner(const WaveField& a, const WaveField& b) { return inner(a, b).real(); }

void normalize(WaveField& u, double c) {
    const double m = std::sqrt(mass(u));
    if (!(m > 0.0)) throw NumericalError("iterate vanished");
    const double s = c / m;
    for (auto& v : u.values) v *= s;
}

// P = D B D with D = (1 + tau |k|^2/2)^{-1/2} in Fourier space and B = (1 + tau V)^{-1}.
WaveField precondition(const OperatorSet& ops, const WaveField& f, double tau, Exec exec) {
    const GridSpec& g = f.grid;
    const auto kin = ops.kinetic_multiplier();
    const auto V = ops.potential();
    WaveField out = f;
    auto apply_D = [&] {
        forward_all(out.values, g, exec);
        kernels::for_each_index(out.size(), exec, [&](std::size_t i) { out.values[i] /= std::sqrt(1.0 + tau * kin[i]); });
        inverse_all(out.values, g, exec);
    };
    apply_D();
    kernels::for_each_index(out.size(), exec, [&](std::size_t i) { out.values[i] /= 1.0 + tau * V[i]; });
    apply_D();
    return out;
}

}  // namespace

GroundStateResult minimize_energy_constrained(const OperatorSet& ops, double c, const WaveField& init,
                                              const MinimizeOptions& opt) {
    const PhysicsParams& prm = ops.params();
    require_same_grid(init.grid, ops.grid());
    if (!(c > 0.0)) throw ConfigError("mass c must be > 0");
    if (!(std::abs(prm.Omega) < prm.gamma)) throw ConfigError("need |Omega| < gamma for a constrained minimizer");
    if (prm.kappa == 1 && prm.p > prm.critical_power() + 1e-12 &&
        !(prm.nonlinearity.kind == NonlinearityModel::Kind::power && prm.nonlinearity.lambda == 0.0))
        throw ConfigError("focusing supercritical energy is unbounded below on the mass sphere");
    if (prm.kappa == 1 && prm.mass_critical()) {
        const double cm = critical_mass(prm);
        if (!(c < cm))
            throw ConfigError("threshold violation: c = " + std::to_string(c) + " >= critical mass " + std::to_string(cm));
    }
    if (!init.is_finite()) throw ConfigError("initial guess is not finite");

    GroundStateResult res;
    res.mass = c;
    WaveField u = init;
    normalize(u, c);
    double tau = opt.tau > 0.0 ? opt.tau : 1e-2 / prm.gamma;
    const double c2 = c * c;

    WaveField hu = gradient_field(ops, u);
    double E = record(u, ops).energy;
    if (opt.keep_history) res.energy_history.push_back(E);
    auto evaluate = [&](const WaveField& w, const WaveField& hw) {
        const double omega = -real_inner(hw, w) / c2;
        WaveField r = hw;
        for (std::size_t i = 0; i < r.size(); ++i) r.values[i] += omega * w.values[i];
        return std::pair{omega, std::sqrt(mass(r))};
    };
    auto [omega, resid] = evaluate(u, hu);

    for (int it = 1; it <= opt.max_iterations; ++it) {
        bool accepted = false;
        for (int tries = 0; tries < 60 && !accepted; ++tries) {
            const WaveField ph = precondition(ops, hu, tau, opt.exec);
            const WaveField pu = precondition(ops, u, tau, opt.exec);
            const double shift = real_inner(ph, u) / real_inner(pu, u);
            WaveField trial = u;
            for (std::size_t i = 0; i < u.size(); ++i) trial.values[i] -= tau * (ph.values[i] - shift * pu.values[i]);
            normalize(trial, c);
            const double Et = record(trial, ops).energy;
            if (std::isfinite(Et) && Et <= E + 1e-15 * std::abs(E)) {
                const double dE = E - Et;
                u = std::move(trial);
                hu = gradient_field(ops, u);
                E = Et;
                std::tie(omega, resid) = evaluate(u, hu);
                accepted = true;
                tau = std::min(tau * 1.5, opt.tau_max);
                res.iterations = it;
                if (opt.keep_history) res.energy_history.push_back(E);
                if (dE <= opt.tol * std::abs(E) && resid < opt.tol) res.converged = true;
            } else {
                tau *= 0.5;
            }
        }
        if (res.converged) break;
        if (!accepted) {
            // no descent at any step size: stalled at roundoff
            res.converged = resid < opt.tol;
            break;
        }
    }

    // Gauge: real and positive at the node of largest modulus.
    std::size_t imax = 0;
    for (std::size_t i = 1; i < u.size(); ++i)
        if (std::norm(u.values[i]) > std::norm(u.values[imax])) imax = i;
    const cplx gauge = std::conj(u.values[imax]) / std::abs(u.values[imax]);
    for (auto& v : u.values) v *= gauge;

    res.field = std::move(u);
    res.energy = E;
    res.omega = omega;
    res.residual = resid;
    if (!res.converged)
        throw NumericalError("constrained minimization did not converge (residual " + std::to_string(resid) + ")");
    return res;
}

CoercivityReport energy_lower_bound_check(const WaveField& u, const OperatorSet& ops) {
    const PhysicsParams& prm = ops.params();
    if (!prm.mass_critical()) throw ConfigError("coercivity check needs the mass-critical power p = 1 + 4/n");
    require_same_grid(u.grid, ops.grid());
    const int n = prm.n;
    CoercivityReport rep;
    const RadialProfile q1 = solve_Q_radial(prm.p, 1.0, n);
    rep.c_gn = (n + 2.0) / (2.0 * n * std::pow(q1.mass, 2.0 / n));
    const auto grad = ops.magnetic_gradient(u);
    for (const auto& gcomp : grad) rep.magnetic_kinetic += mass(gcomp);
    const auto Ve = ops.effective_potential();
    const GridSpec& g = u.grid;
    double lhs = 0.0, trap = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double v = std::norm(u.values[i]);
        lhs += std::pow(v, 1.0 + 2.0 / n);
        trap += Ve[i] * v;
    }
    rep.lhs = g.cell_volume() * lhs;
    rep.effective_trap = g.cell_volume() * trap;
    const double m = mass(u);
    rep.rhs = rep.c_gn * rep.magnetic_kinetic * std::pow(m, 2.0 / n);
    rep.slack = rep.rhs - rep.lhs;
    rep.relative_slack = rep.rhs > 0.0 ? rep.slack / rep.rhs : 0.0;
    rep.energy = record(u, ops).energy;
    double factor = 1.0;
    if (prm.kappa == 1) {
        const double cm2 = critical_mass(prm);
        factor = 1.0 - std::pow(m / (cm2 * cm2), 2.0 / n);
    }
    rep.energy_lower_bound = 0.5 * factor * rep.magnetic_kinetic + rep.effective_trap;
    if (prm.kappa == 1 && prm.nonlinearity.kind == NonlinearityModel::Kind::general)
        rep.energy_lower_bound -= prm.nonlinearity.growth_constant * m;
    return rep;
}

}  // namespace rnls
