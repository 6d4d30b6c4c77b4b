#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fields.hpp"
#include "rnls/experiments.hpp"

using namespace rnls;
using namespace testfields;
using doctest::Approx;

namespace {

constexpr double pi = std::numbers::pi;

PhysicsParams physics(double Omega, NonlinearityModel nl = NonlinearityModel::power(1.0)) {
    PhysicsParams prm;
    prm.Omega = Omega;
    prm.nonlinearity = std::move(nl);
    return prm;
}

WaveField dipole_field(const GridSpec& g, int axis) {
    return sample_field(g, [&](const std::array<double, 3>& x) {
        return cplx{x[axis] * std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1])), 0.0};
    });
}

double max_abs_diff(const WaveField& a, const WaveField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

}  // namespace

TEST_CASE("rotate_field turns x1 into x2 under a quarter turn") {
    const GridSpec g = make_grid(2, 8.0, 64);
    const WaveField f1 = dipole_field(g, 0), f2 = dipole_field(g, 1);
    CHECK(max_abs_diff(rotate_field(f1, pi / 2), f2) < 1e-10);
    CHECK(max_abs_diff(rotate_field(f2, -pi / 2), f1) < 1e-10);
    // half turn: exact index flip
    WaveField neg = f1;
    for (auto& v : neg.values) v = -v;
    CHECK(max_abs_diff(rotate_field(f1, pi), neg) < 1e-12);

    const WaveField r = random_smooth(g, 7, 0.8);
    CHECK(max_abs_diff(rotate_field(rotate_field(r, 0.7), -0.7), r) < 1e-9);
    CHECK(max_abs_diff(rotate_field(rotate_field(r, 0.4), 0.5), rotate_field(r, 0.9)) < 1e-9);
    CHECK(mass(rotate_field(r, 2.3)) == Approx(mass(r)).epsilon(1e-12));
}

TEST_CASE("orbit distance removes phase and rotation") {
    const GridSpec g = make_grid(2, 8.0, 64);
    const WaveField v = random_smooth(g, 3, 1.2);
    WaveField u = rotate_field(v, 0.5);
    for (auto& z : u.values) z *= std::polar(1.0, 0.3);
    const OrbitDistance d = orbit_distance(u, v);
    CHECK(d.distance < 1e-4 * sigma_norm(v));
    CHECK(d.angle == Approx(2 * pi - 0.5).epsilon(1e-4));
    CHECK(std::remainder(d.phase + 0.3, 2 * pi) == Approx(0.0).epsilon(1e-6));

    // a genuinely different field stays away
    const WaveField w = random_smooth(g, 4, 1.2);
    CHECK(orbit_distance(w, v).distance > 1e-2 * sigma_norm(v));
    CHECK_THROWS_AS(orbit_distance(u, v, 0), ConfigError);
}

TEST_CASE("sigma norm of the oscillator Gaussian") {
    // ||grad||^2 = gamma, ||x u||^2 = 1/gamma in 2D at unit mass
    const GridSpec g = make_grid(2, 8.0, 64);
    const double gamma = 1.5;
    CHECK(sigma_norm(oscillator_gaussian(g, gamma)) == Approx(std::sqrt(1.0 + gamma + 1.0 / gamma)).epsilon(1e-10));
}

TEST_CASE("rate fit recovers exact power laws") {
    for (double expo : {-0.5, -1.0}) {
        CAPTURE(expo);
        std::vector<double> t, grad;
        const double T = 1.3;
        for (int i = 0; i < 400; ++i) {
            const double tau = T * std::pow(10.0, -3.0 * i / 399.0);
            t.push_back(T - tau);
            grad.push_back(2.0 * std::pow(tau, expo));
        }
        const RateFit f = blowup_rate_fit(t, grad, T);
        CHECK(f.slope == Approx(expo).epsilon(1e-3));
        CHECK(f.intercept == Approx(std::log(2.0)).epsilon(1e-9));
        CHECK(f.residual < 1e-10);
        CHECK(f.samples >= 30);
        CHECK(f.free_t_star == Approx(T).epsilon(1e-4));
        CHECK(f.free_slope == Approx(expo).epsilon(1e-3));
    }
}

TEST_CASE("rate fit rejects sparse windows") {
    std::vector<double> t, grad;
    for (int i = 0; i < 20; ++i) {
        t.push_back(0.04 * i);
        grad.push_back(1.0 / std::sqrt(1.0 - 0.04 * i));
    }
    CHECK_THROWS_WITH_AS(blowup_rate_fit(t, grad, 1.0), doctest::Contains("insufficient samples"), NumericalError);
    CHECK_THROWS_AS(blowup_rate_fit({}, {}, 1.0), NumericalError);
    RunRecord not_blowup;
    not_blowup.status = RunStatus::finished;
    CHECK_THROWS_AS(blowup_rate_fit(not_blowup), ConfigError);
}

TEST_CASE("vortex states match the analytic energies") {
    const GridSpec g = make_grid(2, 12.0, 256);
    std::vector<int> ms;
    for (int m = 0; m <= 20; ++m) ms.push_back(m);
    const VortexResult fast = vortex_counterexample(1.0, 1.5, 1.0, 4.0, ms, g);
    REQUIRE(fast.rows.size() == ms.size());
    for (const auto& r : fast.rows) {
        CAPTURE(r.m);
        CHECK(r.kinetic == Approx(r.m + 1.0).epsilon(1e-6));
        CHECK(r.angular == Approx(r.m).epsilon(1e-6));
        CHECK(std::abs(r.angular - r.m) <= 1e-6);
        CHECK(r.trap == Approx(0.5 * (r.m + 1.0)).epsilon(1e-6));
        CHECK(std::abs(r.difference) <= 1e-6);
        CHECK(std::abs(r.energy - r.leading) <= 1e-2 * std::abs(r.leading) + r.tail + 1e-9);
    }
    CHECK(fast.strictly_decreasing());
    CHECK(fast.slope(10, 20) == Approx(1.0 - 1.5).epsilon(0.02));
    CHECK_THROWS_AS(fast.slope(10, 25), ConfigError);

    const VortexResult slow = vortex_counterexample(1.0, 0.5, 1.0, 4.0, ms, g);
    CHECK(slow.strictly_increasing());
    CHECK(slow.slope(10, 20) == Approx(0.5).epsilon(0.02));
}

TEST_CASE("vortex states up to m = 40 on 256 points") {
    const GridSpec g = make_grid(2, 12.0, 256);
    const WaveField psi = vortex_state(g, 1.0, 40);
    CHECK(mass(psi) == Approx(1.0).epsilon(1e-12));
    CHECK(max_abs_diff(vortex(g, 1.0, -3), vortex_state(g, 1.0, -3)) < 1e-12);
    CHECK_THROWS_AS(vortex_state(make_grid(2, 6.0, 64), 1.0, 30), ConfigError);
    CHECK_THROWS_AS(vortex_counterexample(1.0, 1.5, 1.0, 2.0, {1}, g), ConfigError);
    CHECK_THROWS_AS(vortex_counterexample(1.0, 1.5, 1.0, 4.0, {1}, make_grid(3, 6.0, 16)), ConfigError);
}

TEST_CASE("sweep bookkeeping") {
    SweepResult s;
    auto row = [](double c, Outcome o, BlowupCondition cond = BlowupCondition::none) {
        SweepRow r;
        r.c = c;
        r.run.outcome = o;
        r.run.verdict.condition = cond;
        return r;
    };
    s.rows = {row(0.9, Outcome::global), row(0.95, Outcome::global), row(1.0, Outcome::blowup, BlowupCondition::a)};
    CHECK(s.monotone());
    CHECK(s.verdicts_confirmed());
    REQUIRE(s.transition());
    CHECK(s.transition()->first == 0.95);
    CHECK(s.transition()->second == 1.0);

    s.rows.push_back(row(1.05, Outcome::global, BlowupCondition::a));
    CHECK_FALSE(s.monotone());
    CHECK_FALSE(s.verdicts_confirmed());
    CHECK(to_string(Outcome::undetermined) == "undetermined");
    CHECK(outcome_from_string("blowup") == Outcome::blowup);
    CHECK(data_family_from_string(to_string(DataFamily::gaussian)) == DataFamily::gaussian);
    CHECK_THROWS_AS(data_family_from_string("sech"), ConfigError);
    CHECK(perturbation_from_string(to_string(Perturbation::chirp)) == Perturbation::chirp);
}

TEST_CASE("short sub-threshold sweep stays global") {
    SweepOptions so;
    so.run.points = 64;
    so.run.max_points = 128;
    so.run.t_end = 2.0;
    so.run.dt = 5e-3;
    const SweepResult s = threshold_sweep(physics(0.5), DataFamily::gaussian, {0.7, 0.5}, so);
    REQUIRE(s.rows.size() == 2);
    CHECK(s.rows[0].c == 0.5);
    CHECK(s.unit_mass == Approx(std::sqrt(pi * 1.86225)).epsilon(1e-4));
    for (const auto& r : s.rows) {
        CHECK(r.run.outcome == Outcome::global);
        CHECK(r.run.verdict.condition == BlowupCondition::none);
        CHECK(r.run.t_stop == Approx(2.0));
        CHECK(r.run.series.front().mass == Approx(r.c * r.c * pi * 1.86225).epsilon(1e-4));
    }
    CHECK(s.monotone());

    // the pool merges rows in c order and matches the serial run
    so.workers = 2;
    const SweepResult p = threshold_sweep(physics(0.5), DataFamily::gaussian, {0.7, 0.5}, so);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(p.rows[k].c == s.rows[k].c);
        CHECK(p.rows[k].run.series.back().energy == s.rows[k].run.series.back().energy);
    }
}

TEST_CASE("sweeps reject models outside the critical focusing case") {
    PhysicsParams sub = physics(0.0);
    sub.p = 2.0;
    CHECK_THROWS_AS(threshold_sweep(sub, DataFamily::scaled_Q, {0.9}), ConfigError);
    PhysicsParams defoc = physics(0.0);
    defoc.kappa = -1;
    CHECK_THROWS_AS(threshold_sweep(defoc, DataFamily::scaled_Q, {0.9}), ConfigError);
    CHECK_THROWS_AS(threshold_sweep(physics(0.0, NonlinearityModel::inhomogeneous(1.0, 2.0)), DataFamily::scaled_Q,
                                    {0.9}),
                    ConfigError);
    CHECK_THROWS_AS(inhomogeneous_threshold(physics(0.0), {0.9}), ConfigError);
}

TEST_CASE("inhomogeneous reference masses bracket a gap") {
    const SweepResult s = inhomogeneous_threshold(physics(0.0, NonlinearityModel::inhomogeneous(1.0, 2.0)), {});
    const auto [lo, hi] = coefficient_bounds(NonlinearityModel::inhomogeneous(1.0, 2.0));
    CHECK(lo == 1.0);
    CHECK(hi == 2.0);
    REQUIRE(s.mass_lambda_max);
    REQUIRE(s.mass_lambda_min);
    CHECK(*s.mass_lambda_max < *s.mass_lambda_min);
    CHECK(*s.mass_lambda_min == Approx(std::sqrt(pi * 1.86225)).epsilon(1e-4));
    // ||Q_lambda||^2 = ||Q_1||^2 / lambda in 2D
    CHECK(*s.mass_lambda_max == Approx(*s.mass_lambda_min / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("standing wave stays on its orbit, small kicks stay close") {
    StabilityOptions so;
    so.periods = 1.0;
    so.cadence = 40;
    const PhysicsParams prm = physics(0.5);
    const double c = 0.5 * std::sqrt(pi * 1.86225);
    const StabilityResult s = stability_run(prm, c, 1e-2, {Perturbation::random_smooth, Perturbation::dipole,
                                                           Perturbation::chirp}, so);
    REQUIRE(s.traces.size() == 4);
    CHECK(s.traces[0].direction == "none");
    CHECK(s.traces[0].sup_distance <= 1e-4);
    for (std::size_t k = 1; k < 4; ++k) {
        CAPTURE(s.traces[k].direction);
        CHECK(s.traces[k].status == RunStatus::finished);
        CHECK(s.traces[k].sup_distance <= 5e-2);
        CHECK(s.traces[k].sup_distance > 1e-4);
        CHECK(s.traces[k].distance.front() <= 1.5e-2 * s.sigma_norm_ground);
    }
    CHECK_THROWS_AS(stability_run(physics(1.2), c, 1e-2, {}), ConfigError);
    CHECK_THROWS_AS(stability_run(prm, c, 0.2, {}), ConfigError);
}

TEST_CASE("perturbed supercritical mass blows up") {
    const PhysicsParams prm = physics(0.0);
    const RadialProfile q = solve_Q_radial(3.0, 1.0, 2);
    RunOptions ro;
    ro.cadence = 4;
    const RunRecord r = run_classified(
        prm,
        [&](const GridSpec& g) {
            WaveField u = lift_to_grid(q, g, 1.0);
            const WaveField eta = perturbation_direction(u, Perturbation::dipole);
            const double scale = 1e-2 * sigma_norm(u) / sigma_norm(eta);
            for (std::size_t i = 0; i < u.size(); ++i) u.values[i] += scale * eta.values[i];
            const double s = 1.05 * std::sqrt(q.mass / mass(u));
            for (auto& v : u.values) v *= s;
            return u;
        },
        ro);
    CHECK(r.verdict.condition != BlowupCondition::none);
    CHECK(r.outcome == Outcome::blowup);
    CHECK(r.t_detect < 1.2 * pi / 2);
}
