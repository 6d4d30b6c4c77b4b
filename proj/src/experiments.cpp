#include "rnls/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

#include "rnls/spectral.hpp"

namespace rnls {

using kernels::Exec;

namespace {

constexpr double pi = std::numbers::pi;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// f(x) -> f(x + s x_other e_axis): the phase e^{i k s x_other} in the axis transform.
void shear(std::vector<cplx>& data, const GridSpec& g, int axis, int other, double s) {
    forward_axis(data, g, axis);
    kernels::for_each_index(data.size(), Exec::parallel, [&](std::size_t i) {
        const auto ijk = g.unflatten(i);
        data[i] *= std::polar(1.0, g.wavenumber(axis, ijk[axis]) * s * g.coordinate(other, ijk[other]));
    });
    inverse_axis(data, g, axis);
}

double sigma_sq(const WaveField& v, const std::vector<WaveField>& grad) {
    const GridSpec& g = v.grid;
    double s = mass(v);
    for (const auto& d : grad) s += mass(d);
    s += kernels::reduce<double>(v.size(), Exec::parallel,
                                 [&](std::size_t i) { return g.radius_squared(i) * std::norm(v.values[i]); }) *
         g.cell_volume();
    return s;
}

// <ref, v>_Sigma with ref pieces precomputed: int conj(ref) v + grad + |x|^2 terms.
cplx sigma_inner(const WaveField& ref, const std::vector<WaveField>& ref_grad, const WaveField& v,
                 const std::vector<WaveField>& v_grad) {
    const GridSpec& g = v.grid;
    cplx s = inner(v, ref);
    for (std::size_t a = 0; a < v_grad.size(); ++a) s += inner(v_grad[a], ref_grad[a]);
    const double re = kernels::reduce<double>(v.size(), Exec::parallel, [&](std::size_t i) {
        return g.radius_squared(i) * (std::conj(ref.values[i]) * v.values[i]).real();
    });
    const double im = kernels::reduce<double>(v.size(), Exec::parallel, [&](std::size_t i) {
        return g.radius_squared(i) * (std::conj(ref.values[i]) * v.values[i]).imag();
    });
    return s + cplx{re, im} * g.cell_volume();
}

void require_mass_critical_focusing(const PhysicsParams& prm) {
    prm.validate();
    if (!prm.mass_critical()) throw ConfigError("threshold sweeps need the mass-critical power p = 1 + 4/n");
    if (prm.kappa != +1) throw ConfigError("threshold sweeps need a focusing nonlinearity (kappa = +1)");
}

SweepResult run_rows(SweepResult res, const std::vector<double>& c_list, const SweepOptions& opt,
                     const std::function<DataBuilder(double)>& builder_for) {
    std::vector<double> cs = c_list;
    std::sort(cs.begin(), cs.end());
    res.rows.resize(cs.size());
    RunOptions ro = opt.run;
    if (opt.workers > 1) ro.exec = Exec::serial;
    auto work = [&](std::size_t k) {
        res.rows[k].c = cs[k];
        res.rows[k].family = res.family;
        res.rows[k].run = run_classified(res.params, builder_for(cs[k]), ro);
    };
    if (opt.workers <= 1) {
        for (std::size_t k = 0; k < cs.size(); ++k) work(k);
        return res;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(cs.size());
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < std::min<std::size_t>(opt.workers, cs.size()); ++w)
        pool.emplace_back([&] {
            for (std::size_t k; (k = next++) < cs.size();) {
                try {
                    work(k);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return res;
}

struct LineFit {
    double slope = 0.0, intercept = 0.0, rms = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LineFit f;
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw NumericalError("degenerate fit window");
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        ss += r * r;
    }
    f.rms = std::sqrt(ss / n);
    return f;
}

template <class F>
double golden_min(F&& f, double lo, double hi, double tol) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

}  // namespace

WaveField oscillator_state(const GridSpec& g, double gamma, double norm) {
    const double amp = norm * std::pow(gamma / pi, g.dim() / 4.0);
    return sample_field(g, [&](const std::array<double, 3>& x) {
        return cplx{amp * std::exp(-0.5 * gamma * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])), 0.0};
    });
}

std::string to_string(DataFamily f) { return f == DataFamily::scaled_Q ? "scaled-Q" : "gaussian"; }

DataFamily data_family_from_string(const std::string& s) {
    if (s == "scaled-Q") return DataFamily::scaled_Q;
    if (s == "gaussian") return DataFamily::gaussian;
    throw ConfigError("unknown initial-data family '" + s + "' (expected scaled-Q or gaussian)");
}

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::global: return "global";
        case Outcome::blowup: return "blowup";
        case Outcome::undetermined: return "undetermined";
    }
    return "undetermined";
}

Outcome outcome_from_string(const std::string& s) {
    if (s == "global") return Outcome::global;
    if (s == "blowup") return Outcome::blowup;
    if (s == "undetermined") return Outcome::undetermined;
    throw ConfigError("unknown outcome '" + s + "'");
}

RunRecord run_classified(const PhysicsParams& prm, const DataBuilder& data, const RunOptions& opt) {
    prm.validate();
    if (!(opt.dt > 0.0)) throw ConfigError("dt must be > 0");
    if (opt.max_points < opt.points) throw ConfigError("max_points must be >= points");
    const double t_end = opt.t_end > 0.0 ? opt.t_end : 3.0 * 2.0 * pi / prm.gamma;
    const auto t0 = std::chrono::steady_clock::now();

    RunRecord rec;
    for (std::size_t points = opt.points;; points *= 2) {
        const GridSpec g = make_grid(opt.n, opt.half_extent, points);
        const OperatorSet ops(g, prm);
        WaveField u0 = data(g);
        rec.verdict = classify_blowup(record(u0, ops), prm);
        EvolutionState st(std::move(u0), prm, opt.dt);
        EvolveOptions eo;
        eo.t_end = t_end;
        eo.cadence = opt.cadence;
        eo.control = opt.control;
        eo.exec = opt.exec;
        rec.series = evolve(st, ops, eo);
        ++rec.attempts;
        rec.points = points;
        rec.status = st.status;
        rec.t_stop = st.t;
        rec.t_detect = st.t_detect;
        rec.max_grad_ratio = st.max_grad_ratio;
        rec.max_sigma_ratio = 1.0;
        for (const auto& r : rec.series)
            rec.max_sigma_ratio = std::max(rec.max_sigma_ratio, r.sigma_norm / rec.series.front().sigma_norm);
        if (st.status == RunStatus::resolution_lost && 2 * points <= opt.max_points) continue;
        break;
    }
    switch (rec.status) {
        case RunStatus::blowup_detected:
            rec.outcome = Outcome::blowup;
            break;
        case RunStatus::finished:
            rec.outcome = rec.max_grad_ratio <= opt.growth_bound && rec.max_sigma_ratio <= opt.growth_bound
                              ? Outcome::global
                              : Outcome::undetermined;
            break;
        default:
            rec.outcome = Outcome::undetermined;
    }
    if (!opt.keep_series) rec.series.clear();
    rec.runtime = seconds_since(t0);
    return rec;
}

bool SweepResult::monotone() const {
    bool seen_blowup = false;
    for (const auto& r : rows) {
        if (r.run.outcome == Outcome::blowup) seen_blowup = true;
        if (r.run.outcome == Outcome::global && seen_blowup) return false;
    }
    return true;
}

bool SweepResult::verdicts_confirmed() const {
    for (const auto& r : rows)
        if (r.run.verdict.condition != BlowupCondition::none && r.run.outcome == Outcome::global) return false;
    return true;
}

std::optional<std::pair<double, double>> SweepResult::transition() const {
    std::optional<double> lo, hi;
    for (const auto& r : rows) {
        if (r.run.outcome == Outcome::global) lo = r.c;
        if (r.run.outcome == Outcome::blowup && !hi) hi = r.c;
    }
    if (!lo || !hi) return std::nullopt;
    return std::pair{*lo, *hi};
}

SweepResult threshold_sweep(const PhysicsParams& prm, DataFamily family, const std::vector<double>& c_list,
                            const SweepOptions& opt) {
    require_mass_critical_focusing(prm);
    if (prm.nonlinearity.kind != NonlinearityModel::Kind::power)
        throw ConfigError("threshold_sweep needs a constant coefficient; use inhomogeneous_threshold");
    if (!(opt.alpha > 0.0)) throw ConfigError("alpha must be > 0");
    const RadialProfile q = solve_Q_radial(prm.p, prm.nonlinearity.lambda, prm.n);
    SweepResult res;
    res.params = prm;
    res.family = family;
    res.unit_mass = std::sqrt(q.mass);
    return run_rows(std::move(res), c_list, opt, [&](double c) -> DataBuilder {
        if (family == DataFamily::scaled_Q)
            return [&q, c, &opt](const GridSpec& g) { return lift_to_grid(q, g, c, opt.alpha, opt.theta); };
        const double norm = c * std::sqrt(q.mass);
        const double gamma = prm.gamma;
        return [norm, gamma](const GridSpec& g) { return oscillator_state(g, gamma, norm); };
    });
}

std::pair<double, double> coefficient_bounds(const NonlinearityModel& m) {
    switch (m.kind) {
        case NonlinearityModel::Kind::power:
            return {m.lambda, m.lambda};
        case NonlinearityModel::Kind::inhomogeneous:
            if (!m.radial_lambda) return {m.lambda0, m.lambda0 + 1.0};
            return m.coefficient_range(1e3);
        case NonlinearityModel::Kind::general:
            break;
    }
    throw ConfigError("coefficient bounds need a power-law nonlinearity");
}

SweepResult inhomogeneous_threshold(const PhysicsParams& prm, const std::vector<double>& c_list,
                                    const SweepOptions& opt) {
    require_mass_critical_focusing(prm);
    if (prm.nonlinearity.kind != NonlinearityModel::Kind::inhomogeneous)
        throw ConfigError("inhomogeneous_threshold needs an inhomogeneous coefficient");
    const std::string hyp = check_coefficient_hypothesis(prm.nonlinearity, 1e3);
    if (!hyp.empty()) throw ConfigError("coefficient hypothesis fails: " + hyp);
    const auto [lmin, lmax] = coefficient_bounds(prm.nonlinearity);
    const RadialProfile qmin = solve_Q_radial(prm.p, lmin, prm.n);
    SweepResult res;
    res.params = prm;
    res.family = DataFamily::scaled_Q;
    res.unit_mass = std::sqrt(qmin.mass);
    res.mass_lambda_min = std::sqrt(qmin.mass);
    res.mass_lambda_max = std::sqrt(qmin.mass * std::pow(lmax / lmin, -0.5 * prm.n));
    return run_rows(std::move(res), c_list, opt, [&](double c) -> DataBuilder {
        return [&qmin, c, &opt](const GridSpec& g) { return lift_to_grid(qmin, g, c, opt.alpha, opt.theta); };
    });
}

RateFit blowup_rate_fit(const std::vector<double>& t, const std::vector<double>& grad, double t_ref,
                        std::size_t min_samples) {
    if (t.size() != grad.size()) throw ConfigError("time and gradient series differ in length");
    if (t.empty()) throw NumericalError("insufficient samples: empty series");
    RateFit fit;
    fit.t_ref = t_ref;
    const double span = t_ref - t.front();
    fit.window_lo = span / 10.0;
    fit.window_hi = span;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double tau = t_ref - t[i];
        if (tau >= fit.window_lo && tau <= fit.window_hi && grad[i] > 0.0) {
            x.push_back(std::log(tau));
            y.push_back(std::log(grad[i]));
        }
    }
    fit.samples = x.size();
    if (x.size() < min_samples)
        throw NumericalError("insufficient samples: " + std::to_string(x.size()) + " in the fit window, need " +
                             std::to_string(min_samples));
    const LineFit lf = fit_line(x, y);
    fit.slope = lf.slope;
    fit.intercept = lf.intercept;
    fit.residual = lf.rms;

    // Free reference time: every sample before t_ref, log(t_star - t_last) searched.
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] < t_ref && grad[i] > 0.0) {
            ts.push_back(t[i]);
            ys.push_back(std::log(grad[i]));
        }
    const double t_last = ts.back();
    auto rms_at = [&](double log_gap) {
        const double ts_star = t_last + std::exp(log_gap);
        std::vector<double> xs(ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i) xs[i] = std::log(ts_star - ts[i]);
        return fit_line(xs, ys).rms;
    };
    const double gap = golden_min(rms_at, std::log(1e-6 * span), std::log(span), 1e-6);
    fit.free_t_star = t_last + std::exp(gap);
    std::vector<double> xs(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) xs[i] = std::log(fit.free_t_star - ts[i]);
    fit.free_slope = fit_line(xs, ys).slope;
    return fit;
}

RateFit blowup_rate_fit(const RunRecord& run, std::size_t min_samples) {
    if (run.status != RunStatus::blowup_detected) throw ConfigError("rate fit needs a blowup-detected run");
    std::vector<double> t, g;
    for (const auto& r : run.series) {
        t.push_back(r.t);
        g.push_back(r.grad_norm);
    }
    return blowup_rate_fit(t, g, run.t_detect, min_samples);
}

WaveField rotate_field(const WaveField& u, double angle) {
    const GridSpec& g = u.grid;
    double k = std::round(angle / pi);
    double theta = angle - k * pi;
    WaveField v = u;
    if (std::fmod(std::abs(k), 2.0) == 1.0) {
        // rotation by pi about the x3 axis: x_i -> x_{(N - i) mod N} on axes 0 and 1
        const std::size_t n0 = g.points(0), n1 = g.points(1);
        for (std::size_t idx = 0; idx < g.size(); ++idx) {
            const auto ijk = g.unflatten(idx);
            const std::size_t j0 = (n0 - ijk[0]) % n0, j1 = (n1 - ijk[1]) % n1;
            v.values[j0 + n0 * (j1 + n1 * ijk[2])] = u.values[idx];
        }
    }
    if (theta == 0.0) return v;
    // u(R_{-theta} x) = u o Sx(a) o Sy(b) o Sx(a) with a = tan(theta/2), b = -sin theta
    const double a = std::tan(0.5 * theta), b = -std::sin(theta);
    shear(v.values, g, 0, 1, a);
    shear(v.values, g, 1, 0, b);
    shear(v.values, g, 0, 1, a);
    return v;
}

double sigma_norm(const WaveField& v) { return std::sqrt(sigma_sq(v, gradient(v))); }

OrbitDistance orbit_distance(const WaveField& u, const WaveField& ref, int scan) {
    require_same_grid(u.grid, ref.grid);
    if (scan < 1) throw ConfigError("scan must be >= 1");
    const auto ref_grad = gradient(ref);
    const double ref_sq = sigma_sq(ref, ref_grad);
    auto at = [&](double phi, double* phase) {
        const WaveField w = rotate_field(u, phi);
        const auto wg = gradient(w);
        const cplx z = sigma_inner(ref, ref_grad, w, wg);
        if (phase) *phase = -std::arg(z);
        // || e^{i theta} w - ref ||^2 minimized over theta
        return std::max(0.0, sigma_sq(w, wg) + ref_sq - 2.0 * std::abs(z));
    };
    const double step = 2.0 * pi / scan;
    double best = 0.0, best_val = std::numeric_limits<double>::infinity();
    for (int s = 0; s < scan; ++s) {
        const double val = at(s * step, nullptr);
        if (val < best_val) {
            best_val = val;
            best = s * step;
        }
    }
    OrbitDistance d;
    d.angle = scan == 1 ? 0.0 : golden_min([&](double phi) { return at(phi, nullptr); }, best - step, best + step, 1e-5);
    d.angle = std::fmod(d.angle + 2.0 * pi, 2.0 * pi);
    d.distance = std::sqrt(at(d.angle, &d.phase));
    return d;
}

std::string to_string(Perturbation p) {
    switch (p) {
        case Perturbation::random_smooth: return "random";
        case Perturbation::dipole: return "dipole";
        case Perturbation::chirp: return "chirp";
    }
    return "random";
}

Perturbation perturbation_from_string(const std::string& s) {
    if (s == "random") return Perturbation::random_smooth;
    if (s == "dipole") return Perturbation::dipole;
    if (s == "chirp") return Perturbation::chirp;
    throw ConfigError("unknown perturbation direction '" + s + "' (expected random, dipole or chirp)");
}

WaveField perturbation_direction(const WaveField& q, Perturbation kind, std::uint64_t seed) {
    const GridSpec& g = q.grid;
    WaveField eta(g);
    std::array<cplx, 10> coef{};
    if (kind == Perturbation::random_smooth) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> ud(-1.0, 1.0);
        for (auto& c : coef) c = {ud(rng), ud(rng)};
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto ijk = g.unflatten(i);
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (int a = 0; a < g.dim(); ++a) x[a] = g.coordinate(a, ijk[a]);
        switch (kind) {
            case Perturbation::dipole:
                eta.values[i] = x[0] * q.values[i];
                break;
            case Perturbation::chirp:
                eta.values[i] = cplx{0.0, g.radius_squared(i)} * q.values[i];
                break;
            case Perturbation::random_smooth: {
                // random quadratic polynomial times |q|
                const cplx p = coef[0] + coef[1] * x[0] + coef[2] * x[1] + coef[3] * x[2] + coef[4] * x[0] * x[0] +
                               coef[5] * x[1] * x[1] + coef[6] * x[2] * x[2] + coef[7] * x[0] * x[1] +
                               coef[8] * x[1] * x[2] + coef[9] * x[0] * x[2];
                eta.values[i] = p * std::abs(q.values[i]);
                break;
            }
        }
    }
    return eta;
}

StabilityResult stability_run(const PhysicsParams& prm, double c, double delta,
                              const std::vector<Perturbation>& directions, const StabilityOptions& opt) {
    prm.validate();
    if (!(delta >= 0.0 && delta <= 0.1)) throw ConfigError("perturbation size delta must lie in [0, 0.1]");
    if (!(std::abs(prm.Omega) < prm.gamma)) throw ConfigError("need |Omega| < gamma for orbital stability runs");
    const GridSpec g = make_grid(prm.n, opt.half_extent, opt.points);
    const OperatorSet ops(g, prm);

    StabilityResult res;
    res.ground = minimize_energy_constrained(ops, c, oscillator_state(g, prm.gamma, c), opt.minimize);
    const WaveField& q = res.ground.field;
    res.sigma_norm_ground = sigma_norm(q);

    const double t_end = opt.periods * 2.0 * pi / prm.gamma;
    auto trace = [&](const std::string& name, double d, WaveField u0) {
        StabilityTrace tr;
        tr.direction = name;
        tr.delta = d;
        EvolutionState st(std::move(u0), prm, opt.dt);
        EvolveOptions eo;
        eo.t_end = t_end;
        eo.cadence = opt.cadence;
        eo.exec = opt.exec;
        eo.on_record = [&](const EvolutionState& s, const DiagnosticsRecord&) {
            tr.t.push_back(s.t);
            tr.distance.push_back(orbit_distance(s.field, q, 8).distance);
        };
        evolve(st, ops, eo);
        tr.status = st.status;
        tr.sup_distance = tr.distance.empty() ? 0.0 : *std::max_element(tr.distance.begin(), tr.distance.end());
        return tr;
    };

    res.traces.push_back(trace("none", 0.0, q));
    for (Perturbation kind : directions) {
        WaveField eta = perturbation_direction(q, kind, opt.seed);
        const double scale = res.sigma_norm_ground / sigma_norm(eta);
        WaveField u0 = q;
        for (std::size_t i = 0; i < u0.size(); ++i) u0.values[i] += delta * scale * eta.values[i];
        const double renorm = c / std::sqrt(mass(u0));
        for (auto& v : u0.values) v *= renorm;
        res.traces.push_back(trace(to_string(kind), delta, std::move(u0)));
    }
    return res;
}

WaveField vortex_state(const GridSpec& g, double gamma, int m) {
    if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0");
    const int am = std::abs(m);
    const double lognorm = 0.5 * (am + 1) * std::log(gamma) - 0.5 * (std::log(pi) + std::lgamma(am + 1.0));
    WaveField psi = sample_field(g, [&](const std::array<double, 3>& x) {
        const double r2 = x[0] * x[0] + x[1] * x[1];
        if (r2 == 0.0) return cplx{am == 0 ? std::exp(lognorm) : 0.0, 0.0};
        const double mod = std::exp(lognorm + 0.5 * am * std::log(r2) - 0.5 * gamma * r2);
        return std::polar(mod, m * std::atan2(x[1], x[0]));
    });
    if (spectral_tail_fraction(psi) > 1e-10 || boundary_mass_fraction(psi) > 1e-10)
        throw ConfigError("grid does not resolve the vortex state m = " + std::to_string(m));
    const double s = 1.0 / std::sqrt(mass(psi));
    for (auto& v : psi.values) v *= s;
    return psi;
}

bool VortexResult::strictly_decreasing() const {
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (!(rows[i].energy < rows[i - 1].energy)) return false;
    return true;
}

bool VortexResult::strictly_increasing() const {
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (!(rows[i].energy > rows[i - 1].energy)) return false;
    return true;
}

double VortexResult::slope(int m_lo, int m_hi) const {
    const VortexRow *lo = nullptr, *hi = nullptr;
    for (const auto& r : rows) {
        if (r.m == m_lo) lo = &r;
        if (r.m == m_hi) hi = &r;
    }
    if (!lo || !hi || m_lo == m_hi) throw ConfigError("slope needs two distinct computed m values");
    return (hi->energy - lo->energy) / (m_hi - m_lo);
}

VortexResult vortex_counterexample(double gamma, double Omega, double K, double a, const std::vector<int>& m_list,
                                   const GridSpec& grid) {
    if (grid.dim() != 2) throw ConfigError("vortex states need n = 2");
    if (!(a > 2.0)) throw ConfigError("need a > 2");
    if (!(K >= 0.0)) throw ConfigError("need K >= 0");
    PhysicsParams prm;
    prm.Omega = Omega;
    prm.gamma = gamma;
    prm.n = 2;
    prm.p = a - 1.0;
    prm.kappa = +1;
    const double h = 0.5 * a;
    prm.nonlinearity = NonlinearityModel::general([K, h](double v) { return K * (v + std::pow(v, h)); },
                                                  [K, h](double v) { return K * (1.0 + h * std::pow(v, h - 1.0)); }, K);
    const OperatorSet ops(grid, prm);

    VortexResult res;
    res.gamma = gamma;
    res.Omega = Omega;
    res.K = K;
    res.a = a;
    std::vector<int> ms = m_list;
    std::sort(ms.begin(), ms.end());
    for (int m : ms) {
        const WaveField psi = vortex_state(grid, gamma, m);
        const DiagnosticsRecord r = record(psi, ops);
        VortexRow row;
        row.m = m;
        row.kinetic = r.kinetic;
        row.trap = r.trap;
        row.angular = r.lz_expectation;
        row.interaction = r.interaction;
        row.energy = r.energy;
        const int am = std::abs(m);
        row.leading = (am + 1) * gamma - Omega * m - K;
        // int |psi|^a = pi N^a Gamma(a|m|/2 + 1) / (a gamma/2)^{a|m|/2 + 1},  N^2 = gamma^{|m|+1} / (pi |m|!)
        const double log_n2 = (am + 1) * std::log(gamma) - std::log(pi) - std::lgamma(am + 1.0);
        const double e = 0.5 * a * am + 1.0;
        row.tail = K * std::exp(std::log(pi) + 0.5 * a * log_n2 + std::lgamma(e) - e * std::log(0.5 * a * gamma));
        row.analytic = row.leading - row.tail;
        row.difference = row.energy - row.analytic;
        res.rows.push_back(row);
    }
    return res;
}

}  // namespace rnls
