#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "fields.hpp"
#include "rnls/diagnostics.hpp"
#include "rnls/groundstate.hpp"
#include "rnls/integrator.hpp"

using namespace rnls;
using namespace testfields;
using doctest::Approx;

namespace {

constexpr double pi = std::numbers::pi;

PhysicsParams physics(double Omega, double lambda, int kappa = +1, double p = 3.0) {
    PhysicsParams prm;
    prm.Omega = Omega;
    prm.kappa = kappa;
    prm.p = p;
    prm.nonlinearity = NonlinearityModel::power(lambda);
    return prm;
}

const RadialProfile& unit_profile() {
    static const RadialProfile q = solve_Q_radial(3.0, 1.0, 2);
    return q;
}

GridSpec trap_grid() { return make_grid(2, 8.0, 64); }
GridSpec profile_grid() { return make_grid(2, 10.0, 128); }

bool monotone(const std::vector<double>& e) {
    for (std::size_t i = 1; i < e.size(); ++i)
        if (e[i] > e[i - 1] + 1e-14 * std::abs(e[i - 1])) return false;
    return true;
}

}  // namespace

TEST_CASE("cubic 2D profile carries the reference mass") {
    const auto t0 = std::chrono::steady_clock::now();
    const RadialProfile q = solve_Q_radial(3.0, 1.0, 2);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 5.0);
    CHECK(q.mass == Approx(pi * 1.86225).epsilon(1e-4));
    // Q(0) of  Q'' + Q'/r = 2Q - 2Q^3  (2.20620086 to eight digits)
    CHECK(q.center() == Approx(2.20620086).epsilon(1e-8));
    CHECK(q.ode_residual() <= 1e-8);
    CHECK(q.q.back() < 1e-10 * q.center());
    CHECK(std::abs(q.dq.front()) <= 1e-14);
    for (std::size_t i = 1; i < q.q.size(); ++i) REQUIRE(q.q[i] < q.q[i - 1]);
    // E_00(Q) = K/2 - lambda/2 int Q^4
    CHECK(std::abs(0.5 * q.kinetic - 0.5 * q.lpp) <= 1e-6 * q.kinetic);
}

TEST_CASE("profile scaling in lambda") {
    const RadialProfile& q1 = unit_profile();
    const RadialProfile q2 = solve_Q_radial(3.0, 2.0, 2);
    CHECK(q2.mass == Approx(q1.mass / 2.0).epsilon(1e-9));
    CHECK(q2.center() == Approx(q1.center() / std::sqrt(2.0)).epsilon(1e-9));
    for (double r : {0.0, 0.7, 2.0, 5.0, 30.0})
        CHECK(q2.value(r) == Approx(q1.value(r) / std::sqrt(2.0)).epsilon(1e-7));
}

TEST_CASE("profiles across powers and dimensions satisfy the ODE") {
    struct Case {
        double p;
        int n;
    };
    for (Case c : {Case{2.0, 2}, Case{5.0, 2}, Case{3.0, 3}, Case{7.0 / 3.0, 3}}) {
        CAPTURE(c.p);
        CAPTURE(c.n);
        const RadialProfile q = solve_Q_radial(c.p, 1.0, c.n);
        CHECK(q.ode_residual() <= 1e-8);
        CHECK(pohozaev_residuals(q).max() <= 1e-6);
        CHECK(q.q.back() < 1e-10 * q.center());
    }
}

TEST_CASE("tail beyond the mesh follows the modified Bessel decay") {
    const RadialProfile& q = unit_profile();
    const double R = q.r_max();
    // K_0(sqrt2 r) ~ sqrt(pi / (2 sqrt2 r)) e^{-sqrt2 r}: successive ratios approach e^{-sqrt2}
    const double ratio = q.value(R + 11.0) / q.value(R + 10.0);
    const double expected = std::exp(-std::sqrt(2.0)) * std::sqrt((R + 10.0) / (R + 11.0));
    CHECK(ratio == Approx(expected).epsilon(2e-3));
    CHECK(q.value(R + 1e-9) == Approx(q.q.back()).epsilon(1e-6));
    CHECK(q.slope(0.0) == Approx(0.0));
}

TEST_CASE("profile input validation") {
    CHECK_THROWS_AS(solve_Q_radial(1.0, 1.0, 2), ConfigError);
    CHECK_THROWS_AS(solve_Q_radial(5.0, 1.0, 3), ConfigError);
    CHECK_THROWS_AS(solve_Q_radial(3.0, 0.0, 2), ConfigError);
    CHECK_THROWS_AS(solve_Q_radial(3.0, 1.0, 4), ConfigError);
    ShootingOptions bad;
    bad.q0_lo = 3.0;  // already past Q(0)
    CHECK_THROWS_AS(solve_Q_radial(3.0, 1.0, 2, bad), NumericalError);
    ShootingOptions tight;
    tight.residual_tol = 1e-30;
    tight.max_nodes = 8000;
    CHECK_THROWS_AS(solve_Q_radial(3.0, 1.0, 2, tight), NumericalError);
}

TEST_CASE("Pohozaev identities") {
    const RadialProfile& q = unit_profile();
    const PohozaevResiduals res = pohozaev_residuals(q);
    CHECK(res.max() <= 1e-6);

    RadialProfile off = q;
    for (double& v : off.q) v *= 1.01;
    for (double& v : off.dq) v *= 1.01;
    off.update_integrals();
    const PohozaevResiduals bad = pohozaev_residuals(off);
    CHECK(std::abs(bad.kinetic_vs_potential) >= 1e-3);
    CHECK(std::abs(bad.mass_vs_potential) >= 1e-3);

    // p = 1 + 4/n:  int |grad Q|^2 = 2 lambda n / (n+2) int Q^{2+4/n}
    for (int n : {2, 3}) {
        const double lambda = 1.7;
        const RadialProfile qc = solve_Q_radial(1.0 + 4.0 / n, lambda, n);
        CHECK(qc.kinetic == Approx(2.0 * lambda * n / (n + 2.0) * qc.lpp).epsilon(1e-6));
    }
}

TEST_CASE("sharp Gagliardo-Nirenberg constant") {
    const RadialProfile& q = unit_profile();
    const GNConstant gn = gn_constant(q);
    CHECK(gn.inverse_formula == Approx(q.mass).epsilon(1e-9));
    CHECK(gn.inverse_formula == Approx(pi * 1.86225).epsilon(1e-4));
    CHECK(gn.relative_gap <= 1e-6);
    CHECK(gn.c_gn * gn.inverse_formula == Approx(1.0));

    const GNConstant gn3 = gn_constant(solve_Q_radial(3.0, 3.0, 2));
    CHECK(gn3.inverse_formula == Approx(gn.inverse_formula).epsilon(1e-6));

    for (double p : {2.0, 5.0}) {
        const GNConstant g = gn_constant(solve_Q_radial(p, 1.0, 2));
        CHECK(g.relative_gap <= 1e-6);
    }
    const GNConstant g3 = gn_constant(solve_Q_radial(7.0 / 3.0, 1.0, 3));
    CHECK(g3.relative_gap <= 1e-6);
    // (2 lambda n/(n+2)) ||Q||^{4/n} at the critical power
    CHECK(g3.inverse_formula == Approx(1.2 * std::pow(solve_Q_radial(7.0 / 3.0, 1.0, 3).mass, 2.0 / 3.0)).epsilon(1e-9));
}

TEST_CASE("lifting the profile onto a grid") {
    const RadialProfile& q = unit_profile();
    const GridSpec g = profile_grid();

    const WaveField u = lift_to_grid(q, g);
    CHECK(mass(u) == Approx(q.mass).epsilon(1e-8));
    const WaveField u2 = lift_to_grid(q, g, 2.0);
    CHECK(mass(u2) == Approx(4.0 * q.mass).epsilon(1e-8));
    const WaveField ua = lift_to_grid(q, g, 1.0, 1.1, 0.4);
    CHECK(mass(ua) == Approx(q.mass).epsilon(1e-8));
    CHECK(std::arg(ua.values[g.size() / 2 + g.points(0) / 2]) == Approx(0.4));

    // u = e^{i nu |x|^2} Q:  J' = 2 Im int u-bar x.grad u = 4 nu int |x|^2 Q^2
    const double nu = 0.5;
    const OperatorSet ops(g, physics(0.0, 1.0));
    const DiagnosticsRecord rc = record(lift_to_grid(q, g, 1.0, 1.0, 0.0, nu), ops);
    const DiagnosticsRecord r0 = record(u, ops);
    CHECK(rc.dJ > 0.0);
    CHECK(rc.dJ == Approx(4.0 * nu * r0.J).epsilon(1e-8));

    // The lifted profile is stationary for the free equation: E_00 = 0 on the grid as well.
    CHECK(std::abs(r0.free_energy) <= 1e-6 * r0.kinetic);

    CHECK_THROWS_AS(lift_to_grid(q, make_grid(2, 10.0, 16)), ConfigError);
    CHECK_THROWS_AS(lift_to_grid(q, make_grid(2, 4.0, 64)), ConfigError);
    CHECK_THROWS_AS(lift_to_grid(q, make_grid(3, 10.0, 16)), ConfigError);
}

TEST_CASE("profile table round trip") {
    const RadialProfile& q = unit_profile();
    std::stringstream ss;
    write_profile_table(ss, q);
    const RadialProfile back = read_profile_table(ss);
    CHECK(back.p == q.p);
    CHECK(back.lambda == q.lambda);
    CHECK(back.n == q.n);
    REQUIRE(back.r.size() == q.r.size());
    for (std::size_t i = 0; i < q.r.size(); i += 97) {
        CHECK(back.r[i] == q.r[i]);
        CHECK(back.q[i] == q.q[i]);
    }
    CHECK(back.mass == Approx(q.mass).epsilon(1e-9));
    CHECK(back.value(12.5 + q.r_max()) == Approx(q.value(12.5 + q.r_max())).epsilon(1e-12));

    std::stringstream junk("# not a table\n1 2\n");
    CHECK_THROWS_AS(read_profile_table(junk), IoError);
}

TEST_CASE("critical mass follows the nonlinearity bound") {
    const double q1 = std::sqrt(unit_profile().mass);
    CHECK(critical_mass(physics(0.0, 1.0)) == Approx(q1).epsilon(1e-10));
    CHECK(critical_mass(physics(0.0, 4.0)) == Approx(q1 / 2.0).epsilon(1e-10));
    PhysicsParams inh = physics(0.0, 1.0);
    inh.nonlinearity = NonlinearityModel::inhomogeneous(0.5, 2.0);
    // sup lambda(x) = lambda0 + 1 at the origin
    CHECK(critical_mass(inh) == Approx(q1 / std::sqrt(1.5)).epsilon(1e-10));
    CHECK(std::isinf(critical_mass(physics(0.0, 0.0))));
}

TEST_CASE("linear constrained minimizer is the oscillator ground state") {
    const GridSpec g = trap_grid();
    const WaveField init = random_smooth(g, 3, 1.2);
    MinimizeOptions opt;
    opt.keep_history = true;
    for (double Omega : {0.0, 0.5}) {
        CAPTURE(Omega);
        const OperatorSet ops(g, physics(Omega, 0.0));
        const GroundStateResult r = minimize_energy_constrained(ops, 1.0, init, opt);
        CHECK(r.converged);
        CHECK(r.energy == Approx(1.0).epsilon(1e-6));
        CHECK(r.omega == Approx(-1.0).epsilon(1e-6));
        CHECK(r.residual <= opt.tol);
        CHECK(monotone(r.energy_history));
        CHECK(std::sqrt(mass(r.field)) == Approx(1.0).epsilon(1e-12));
        CHECK(l2_distance(r.field, oscillator_gaussian(g, 1.0)) <= 1e-4);
    }
}

TEST_CASE("focusing rotating minimizer is a standing wave") {
    const GridSpec g = trap_grid();
    const PhysicsParams prm = physics(0.5, 1.0);
    const OperatorSet ops(g, prm);
    const double c = 0.5 * critical_mass(prm);
    MinimizeOptions opt;
    opt.keep_history = true;
    const GroundStateResult r = minimize_energy_constrained(ops, c, random_smooth(g, 11, 1.0), opt);
    CHECK(r.converged);
    CHECK(r.residual <= 1e-8);
    CHECK(monotone(r.energy_history));
    CHECK(std::sqrt(mass(r.field)) == Approx(c).epsilon(1e-12));
    CHECK(record(r.field, ops).energy == Approx(r.energy).epsilon(1e-12));

    // Gauge: real and positive where |u| peaks.
    std::size_t peak = 0;
    for (std::size_t i = 0; i < r.field.size(); ++i)
        if (std::abs(r.field.values[i]) > std::abs(r.field.values[peak])) peak = i;
    CHECK(r.field.values[peak].real() > 0.0);
    CHECK(std::abs(r.field.values[peak].imag()) <= 1e-14 * std::abs(r.field.values[peak]));

    // Stationary, so the virial right-hand side vanishes.
    CHECK(std::abs(virial_rhs(r.field, ops)) <= 1e-6);

    // Same as without rotation: the minimizer is radial.
    const GroundStateResult r0 = minimize_energy_constrained(OperatorSet(g, physics(0.0, 1.0)), c, r.field);
    CHECK(r0.energy == Approx(r.energy).epsilon(1e-9));
    CHECK(r0.omega == Approx(r.omega).epsilon(1e-7));

    // One trap period of evolution keeps |u| and advances the phase by omega t.
    const double period = 2.0 * pi;
    const int steps = 6000;
    Integrator integ(ops, period / steps);
    WaveField u = r.field;
    double worst = 0.0;
    for (int s = 1; s <= steps; ++s) {
        integ.step(u);
        if (s % 200 == 0) {
            double d = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) {
                const double a = std::abs(u.values[i]) - std::abs(r.field.values[i]);
                d += a * a;
            }
            worst = std::max(worst, std::sqrt(d * g.cell_volume()));
        }
    }
    MESSAGE("max || |u(t)| - |u(0)| || over one period: " << worst);
    CHECK(worst <= 1e-4);
    WaveField expect = r.field;
    for (auto& v : expect.values) v *= std::polar(1.0, r.omega * period);
    CHECK(l2_distance(u, expect) <= 1e-3 * c);
}

TEST_CASE("defocusing minimizer exists for every mass") {
    const GridSpec g = trap_grid();
    const OperatorSet ops(g, physics(0.3, 1.0, -1));
    const WaveField init = random_smooth(g, 5, 1.5);
    double previous = 0.0;
    for (double c : {0.5, 2.0, 4.0}) {
        CAPTURE(c);
        const GroundStateResult r = minimize_energy_constrained(ops, c, init);
        CHECK(r.converged);
        CHECK(r.residual <= 1e-9);
        CHECK(std::sqrt(mass(r.field)) == Approx(c).epsilon(1e-12));
        // I_c / c^2 grows with c under repulsion and exceeds the linear value.
        CHECK(r.energy / (c * c) > 1.0);
        CHECK(r.energy / (c * c) > previous);
        previous = r.energy / (c * c);
    }
}

TEST_CASE("minimizer rejects unbounded problems") {
    const GridSpec g = trap_grid();
    const WaveField init = random_smooth(g, 3, 1.2);
    const PhysicsParams crit = physics(0.0, 1.0);
    CHECK_THROWS_AS(minimize_energy_constrained(OperatorSet(g, crit), critical_mass(crit), init), ConfigError);
    CHECK_THROWS_AS(minimize_energy_constrained(OperatorSet(g, crit), 1.01 * critical_mass(crit), init), ConfigError);
    CHECK_THROWS_AS(minimize_energy_constrained(OperatorSet(g, physics(1.0, 1.0)), 0.5, init), ConfigError);
    CHECK_THROWS_AS(minimize_energy_constrained(OperatorSet(g, physics(-1.2, 1.0)), 0.5, init), ConfigError);
    CHECK_THROWS_AS(minimize_energy_constrained(OperatorSet(g, physics(0.0, 1.0, +1, 4.0)), 0.5, init), ConfigError);
    MinimizeOptions few;
    few.max_iterations = 3;
    CHECK_THROWS_AS(minimize_energy_constrained(OperatorSet(g, crit), 1.0, init, few), NumericalError);
}

TEST_CASE("diamagnetic Gagliardo-Nirenberg bound") {
    const RadialProfile& q = unit_profile();
    // Quadrature of Q^4 on a 128^2 grid is good to 3e-9 only; the equality case needs 256^2.
    const GridSpec g = make_grid(2, 10.0, 256);

    const CoercivityReport atq = energy_lower_bound_check(lift_to_grid(q, g), OperatorSet(g, physics(0.0, 1.0)));
    CHECK(atq.c_gn == Approx(1.0 / q.mass).epsilon(1e-9));
    CHECK(std::abs(atq.relative_slack) <= 1e-5);
    CHECK(atq.slack >= -1e-9);

    for (double Omega : {0.0, 0.6}) {
        const OperatorSet ops(g, physics(Omega, 1.0));
        for (const WaveField& u : {oscillator_gaussian(g, 1.0, 1.3), vortex(g, 1.0, 2), lift_to_grid(q, g, 0.7, 1.5, 0.0, 0.2)}) {
            const CoercivityReport rep = energy_lower_bound_check(u, ops);
            CHECK(rep.slack > 0.0);
            CHECK(rep.energy >= rep.energy_lower_bound - 1e-10 * std::abs(rep.energy));
        }
    }

    // Gaussian: int |u|^4 = c^4 gamma / (2 pi), magnetic kinetic = c^2 gamma at A = 0.
    const double c = 1.3;
    const CoercivityReport gr = energy_lower_bound_check(oscillator_gaussian(g, 1.0, c), OperatorSet(g, physics(0.0, 1.0)));
    CHECK(gr.lhs == Approx(std::pow(c, 4) / (2.0 * pi)).epsilon(1e-10));
    CHECK(gr.rhs == Approx(c * c * c * c / q.mass).epsilon(1e-8));

    WaveField zero(g);
    const CoercivityReport z = energy_lower_bound_check(zero, OperatorSet(g, physics(0.3, 1.0)));
    CHECK(z.lhs == 0.0);
    CHECK(z.rhs == 0.0);
    CHECK(z.slack == 0.0);
    CHECK(z.relative_slack == 0.0);

    CHECK_THROWS_AS(energy_lower_bound_check(zero, OperatorSet(g, physics(0.0, 1.0, +1, 2.0))), ConfigError);
}
