#include "rnls/integrator.hpp"

#include <cmath>

#include "rnls/spectral.hpp"

namespace rnls {

using kernels::Exec;

std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::running: return "running";
        case RunStatus::finished: return "finished";
        case RunStatus::blowup_detected: return "blowup-detected";
        case RunStatus::resolution_lost: return "resolution-lost";
    }
    return "running";
}

RunStatus run_status_from_string(const std::string& s) {
    if (s == "running") return RunStatus::running;
    if (s == "finished") return RunStatus::finished;
    if (s == "blowup-detected") return RunStatus::blowup_detected;
    if (s == "resolution-lost") return RunStatus::resolution_lost;
    throw IoError("unknown run status '" + s + "'");
}

Integrator::Integrator(const OperatorSet& ops, double dt, Exec exec) : ops_(ops), exec_(exec) {
    const GridSpec& g = ops.grid();
    if (g.dim() < 2) throw ConfigError("integrator needs n >= 2");
    for (int a = 0; a < g.dim(); ++a) {
        const double cut = (2.0 / 3.0) * g.max_wavenumber(a);
        std::vector<double> k2(g.points(a)), high(g.points(a));
        for (std::size_t m = 0; m < g.points(a); ++m) {
            const double k = g.wavenumber(a, m);
            k2[m] = k * k;
            high[m] = std::abs(k) > cut ? 1.0 : 0.0;
        }
        monitor_k2_.push_back(std::move(k2));
        monitor_high_.push_back(std::move(high));
    }
    set_dt(dt);
}

void Integrator::set_dt(double dt) {
    if (!(std::isfinite(dt)) || dt == 0.0) throw ConfigError("dt must be finite and nonzero");
    dt_ = dt;
    const GridSpec& g = ops_.grid();
    const PhysicsParams& prm = ops_.params();
    const std::size_t N = g.size();

    phase_potential_.resize(N);
    phase_nonlinear_.resize(N);
    const auto V = ops_.potential();
    const auto lam = ops_.coefficient();
    for (std::size_t i = 0; i < N; ++i) {
        phase_potential_[i] = -0.5 * dt * V[i];
        phase_nonlinear_[i] = 0.5 * dt * prm.kappa * lam[i];
    }

    // With rotation the kinetic factor is split in halves around the shears so
    // the composition is a palindrome and exactly reversible on the grid.
    rotate_ = prm.Omega != 0.0;
    const double kdt = rotate_ ? 0.5 * dt : dt;
    kinetic_.assign(static_cast<std::size_t>(g.dim()), {});
    for (int a = 0; a < g.dim(); ++a) {
        const std::size_t n = g.points(a);
        auto& tab = kinetic_[static_cast<std::size_t>(a)];
        tab.resize(n);
        for (std::size_t m = 0; m < n; ++m) {
            const double k = g.wavenumber(a, m);
            tab[m] = std::polar(1.0 / static_cast<double>(n), -0.5 * kdt * k * k);
        }
    }

    shear_x_.clear();
    shear_y_.clear();
    if (rotate_) {
        const double phi = prm.Omega * dt;
        const double a = -std::tan(0.5 * phi);
        const double b = std::sin(phi);
        const std::size_t n0 = g.points(0), n1 = g.points(1);
        shear_x_.resize(n0 * n1);
        for (std::size_t i1 = 0; i1 < n1; ++i1) {
            const double x2 = g.coordinate(1, i1);
            for (std::size_t m = 0; m < n0; ++m) {
                const double k = g.wavenumber(0, m);
                shear_x_[m + n0 * i1] = std::polar(1.0 / static_cast<double>(n0), k * a * x2 - 0.5 * kdt * k * k);
            }
        }
        shear_y_.resize(n1 * n0);
        for (std::size_t i0 = 0; i0 < n0; ++i0) {
            const double x1 = g.coordinate(0, i0);
            for (std::size_t m = 0; m < n1; ++m)
                shear_y_[m + n1 * i0] = std::polar(1.0 / static_cast<double>(n1), g.wavenumber(1, m) * b * x1);
        }
    }
}

void Integrator::phase_half_step(WaveField& u) const {
    const PhysicsParams& prm = ops_.params();
    const bool power = prm.nonlinearity.is_power_law();
    const double expo = 0.5 * (prm.p - 1.0);
    const double half_dt_kappa = 0.5 * dt_ * prm.kappa;
    kernels::for_each_index(u.size(), exec_, [&](std::size_t i) {
        const double v = std::norm(u.values[i]);
        double theta = phase_potential_[i];
        if (power) {
            if (phase_nonlinear_[i] != 0.0) {
                const double gp = prm.p == 3.0 ? v : (v > 0.0 ? std::pow(v, expo) : (prm.p == 1.0 ? 1.0 : 0.0));
                theta += phase_nonlinear_[i] * gp;
            }
        } else {
            theta += half_dt_kappa * prm.nonlinearity.G_prime(v);
        }
        u.values[i] *= cplx{std::cos(theta), std::sin(theta)};
    });
}

void Integrator::axis_pass(WaveField& u, int axis, const std::vector<cplx>& table, bool table_by_line, bool monitor,
                           double& grad2, double& tail) {
    const GridSpec& g = u.grid;
    const kernels::LineLayout lay(g, axis);
    kernels::line_fft(u.values, g, axis, -1, exec_);
    if (monitor) {
        struct Acc {
            double k2 = 0.0, total = 0.0, high = 0.0;
            Acc& operator+=(const Acc& o) {
                k2 += o.k2;
                total += o.total;
                high += o.high;
                return *this;
            }
        };
        const auto& k2 = monitor_k2_[static_cast<std::size_t>(axis)];
        const auto& high = monitor_high_[static_cast<std::size_t>(axis)];
        const std::size_t n = lay.length;
        const Acc acc = kernels::reduce<Acc>(lay.count, exec_, [&](std::size_t line) {
            const cplx* p = u.values.data() + lay.start(line);
            Acc a;
            for (std::size_t m = 0; m < n; ++m) {
                const double w = std::norm(p[m * lay.stride]);
                a.k2 += k2[m] * w;
                a.total += w;
                a.high += high[m] * w;
            }
            return a;
        });
        grad2 += g.cell_volume() / static_cast<double>(n) * acc.k2;
        if (acc.total > 0.0) tail = std::max(tail, acc.high / acc.total);
    }
    if (table_by_line) {
        if (axis == 0) {
            const std::size_t n0 = g.points(0), n1 = g.points(1);
            kernels::multiply_lines(u.values, lay, table, [&](std::size_t s) { return (s / n0) % n1; }, exec_);
        } else {
            const std::size_t n0 = g.points(0);
            kernels::multiply_lines(u.values, lay, table, [&](std::size_t s) { return s % n0; }, exec_);
        }
    } else {
        kernels::multiply_lines(u.values, lay, table, [](std::size_t) { return std::size_t{0}; }, exec_);
    }
    kernels::line_fft(u.values, g, axis, +1, exec_);
}

void Integrator::step(WaveField& u) {
    const GridSpec& g = u.grid;
    phase_half_step(u);
    double grad2 = 0.0, tail = 0.0;
    for (int a = g.dim() - 1; a >= 1; --a) axis_pass(u, a, kinetic_[static_cast<std::size_t>(a)], false, true, grad2, tail);
    if (rotate_) {
        axis_pass(u, 0, shear_x_, true, true, grad2, tail);
        double unused = 0.0, unused_tail = 0.0;
        axis_pass(u, 1, shear_y_, true, false, unused, unused_tail);
        axis_pass(u, 0, shear_x_, true, false, unused, unused_tail);
        for (int a = 1; a < g.dim(); ++a)
            axis_pass(u, a, kinetic_[static_cast<std::size_t>(a)], false, false, unused, unused_tail);
    } else {
        axis_pass(u, 0, kinetic_[0], false, true, grad2, tail);
    }
    phase_half_step(u);
    monitor_grad_ = std::sqrt(grad2);
    monitor_tail_ = tail;
}

void refine_near_blowup(EvolutionState& s, Integrator& integ, const BlowupControl& c) {
    if (s.status != RunStatus::running) return;
    if (!c.refine) {
        if (s.tail > c.tail_limit) s.status = RunStatus::resolution_lost;
        return;
    }
    if (!s.refining && s.grad_ratio >= c.refine_trigger) s.refining = true;
    if (!s.refining) {
        if (s.tail > c.tail_limit) s.status = RunStatus::resolution_lost;
        return;
    }
    if (s.grad_ratio > c.detect_ratio || s.tail > c.tail_limit || !s.field.is_finite()) {
        s.status = RunStatus::blowup_detected;
        s.t_detect = s.t;
        return;
    }
    const int want = 1 + static_cast<int>(std::floor(std::log2(s.grad_ratio / c.refine_trigger)));
    if (want > s.refine_level) {
        s.dt = std::ldexp(s.dt, -(want - s.refine_level));
        s.refine_level = want;
        integ.set_dt(s.dt);
    }
}

void step(EvolutionState& s, Integrator& integ, const BlowupControl& c) {
    if (s.status != RunStatus::running) throw ConfigError("step() on a state that is not running");
    integ.step(s.field);
    s.t += integ.dt();
    ++s.steps;
    s.grad_ratio = s.grad_norm0 > 0.0 ? integ.grad_norm() / s.grad_norm0 : 1.0;
    s.tail = integ.tail_fraction();
    if (!std::isfinite(s.grad_ratio)) s.grad_ratio = std::numeric_limits<double>::infinity();
    s.max_grad_ratio = std::max(s.max_grad_ratio, s.grad_ratio);
    refine_near_blowup(s, integ, c);
    if (s.status == RunStatus::running && !s.field.is_finite()) s.status = RunStatus::resolution_lost;
}

std::vector<DiagnosticsRecord> evolve(EvolutionState& s, const EvolveOptions& opt) {
    const OperatorSet ops(s.field.grid, s.params);
    return evolve(s, ops, opt);
}

std::vector<DiagnosticsRecord> evolve(EvolutionState& s, const OperatorSet& ops, const EvolveOptions& opt) {
    require_same_grid(s.field.grid, ops.grid());
    if (opt.cadence == 0) throw ConfigError("cadence must be >= 1");
    std::vector<DiagnosticsRecord> series;
    auto emit = [&](DiagnosticsRecord r) {
        r.virial_residual = s.tracker.residual(r);
        series.push_back(r);
        if (opt.on_record) opt.on_record(s, series.back());
    };
    if (!s.tracker_ready) {
        DiagnosticsRecord r0 = record(s.field, ops, s.t);
        s.grad_norm0 = r0.grad_norm;
        s.tracker = VirialTracker(r0, s.params);
        s.tracker_ready = true;
        emit(r0);
    }
    const double eps = 1e-9 * std::abs(s.dt);
    if (s.status == RunStatus::finished && (opt.t_end - s.t) * s.dt > 0.0 && std::abs(opt.t_end - s.t) > eps)
        s.status = RunStatus::running;
    if (s.status != RunStatus::running) return series;

    Integrator integ(ops, s.dt, opt.exec);
    std::uint64_t taken = 0;
    bool recorded_last = true;
    while (s.status == RunStatus::running && taken < opt.max_steps) {
        const double rem = opt.t_end - s.t;
        if (rem * s.dt <= 0.0 || std::abs(rem) <= eps) {
            s.status = RunStatus::finished;
            break;
        }
        if (std::abs(rem) < std::abs(s.dt) - eps) {
            // shortened final step
            const double keep = s.dt;
            integ.set_dt(rem);
            s.dt = rem;
            step(s, integ, opt.control);
            if (s.status == RunStatus::running) {
                s.t = opt.t_end;
                s.status = RunStatus::finished;
            }
            s.dt = keep;
        } else {
            step(s, integ, opt.control);
        }
        ++taken;
        recorded_last = false;
        if (s.steps % opt.cadence == 0 || s.status != RunStatus::running) {
            emit(record(s.field, ops, s.t));
            recorded_last = true;
        }
    }
    if (!recorded_last) emit(record(s.field, ops, s.t));
    return series;
}

}  // namespace rnls
