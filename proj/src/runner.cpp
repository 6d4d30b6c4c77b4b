#include "rnls/runner.hpp"

#include <chrono>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "rnls/experiments.hpp"
#include "rnls/io.hpp"

#ifndef RNLS_VERSION
#define RNLS_VERSION "unknown"
#endif

namespace rnls {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json opt_num(const std::optional<double>& x) { return x ? num(*x) : json(nullptr); }

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

json verdict_json(const BlowupVerdict& v) {
    return {{"condition", to_string(v.condition)},
            {"window", {num(v.window_lo), num(v.window_hi)}},
            {"E_minus_l", num(v.E_minus_l)},
            {"T_star", opt_num(v.variance.first_zero)},
            {"quadratic_root", opt_num(v.quadratic_root)}};
}

BlowupControl control_of(const RunConfig& c) {
    BlowupControl ctl;
    ctl.refine_trigger = c.refine_trigger;
    ctl.detect_ratio = c.detect_ratio;
    ctl.tail_limit = c.tail_limit;
    ctl.refine = c.refine;
    return ctl;
}

double reference_lambda(const RunConfig& c) { return c.nonlinearity == "inhomogeneous" ? c.lambda0 : c.lambda; }

const RadialProfile& reference_profile(const RunConfig& c) {
    static thread_local std::optional<RadialProfile> cached;
    const double lam = reference_lambda(c);
    if (!cached || cached->p != c.p || cached->n != c.n || cached->lambda != lam)
        cached = solve_Q_radial(c.p, lam, c.n);
    return *cached;
}

WaveField initial_data(const RunConfig& c, const GridSpec& g) {
    const RadialProfile& q = reference_profile(c);
    if (c.data == "gaussian") return oscillator_state(g, c.gamma, c.c * std::sqrt(q.mass));
    return lift_to_grid(q, g, c.c, c.alpha, c.theta, c.nu);
}

bool same_params(const PhysicsParams& a, const PhysicsParams& b) {
    const auto& x = a.nonlinearity;
    const auto& y = b.nonlinearity;
    return a.Omega == b.Omega && a.gamma == b.gamma && a.p == b.p && a.n == b.n && a.kappa == b.kappa &&
           x.kind == y.kind && x.lambda == y.lambda && x.lambda0 == y.lambda0 && x.decay == y.decay;
}

struct KindResult {
    json results;
    json timing = json::object();
    int exit_code = 0;
};

KindResult run_groundstate(const RunConfig& c, const std::string& dir, kernels::Exec exec) {
    const PhysicsParams prm = c.physics();
    const GridSpec g = make_grid(c.n, c.L, c.N);
    const OperatorSet ops(g, prm);
    const RadialProfile& q = reference_profile(c);
    const double norm = c.c * std::sqrt(q.mass);
    MinimizeOptions mo;
    mo.tol = c.tolerance;
    mo.max_iterations = c.max_iterations;
    mo.exec = exec;
    const GroundStateResult gs = minimize_energy_constrained(ops, norm, oscillator_state(g, c.gamma, norm), mo);

    Checkpoint ck;
    ck.state = EvolutionState(gs.field, prm, c.dt);
    ck.initial = record(gs.field, ops);
    save_checkpoint(ck, path_in(dir, "groundstate.rnls"));
    write_series({ck.initial}, path_in(dir, "groundstate.csv"));
    std::ostringstream table;
    write_profile_table(table, q);
    write_text_file(path_in(dir, "profile.tsv"), table.str());

    KindResult r;
    r.results = {{"mass", gs.mass},
                 {"energy", gs.energy},
                 {"omega", gs.omega},
                 {"residual", gs.residual},
                 {"iterations", gs.iterations},
                 {"converged", gs.converged},
                 {"profile",
                  {{"mass", q.mass},
                   {"center", q.center()},
                   {"ode_residual", q.ode_residual()},
                   {"pohozaev_max", pohozaev_residuals(q).max()}}}};
    if (prm.kappa == +1 && prm.mass_critical()) r.results["critical_mass"] = critical_mass(prm);
    return r;
}

KindResult run_evolve(const RunConfig& c, const std::string& dir, const std::string& resume, kernels::Exec exec) {
    const PhysicsParams prm = c.physics();
    const GridSpec g = make_grid(c.n, c.L, c.N);
    const OperatorSet ops(g, prm);

    Checkpoint ck;
    std::vector<DiagnosticsRecord> series;
    bool have_initial = false;
    if (!resume.empty()) {
        ck = load_checkpoint(resume);
        if (!(ck.state.field.grid == g)) throw ConfigError("checkpoint grid does not match the [grid] block");
        if (!same_params(ck.state.params, prm)) throw ConfigError("checkpoint physics does not match the [physics] block");
        if (ck.state.tracker_ready) {
            // rows up to the checkpoint come from the series written next to it
            const std::string prior = (fs::path(resume).parent_path() / "series.csv").string();
            if (!fs::exists(prior)) throw IoError("resume needs " + prior + " beside the checkpoint");
            for (const auto& r : read_series(prior))
                if (r.t <= ck.state.t) series.push_back(r);
            have_initial = true;
        }
    } else {
        ck.state = EvolutionState(initial_data(c, g), prm, c.dt);
    }

    EvolveOptions eo;
    eo.t_end = c.t_end;
    eo.cadence = c.cadence;
    eo.control = control_of(c);
    eo.exec = exec;
    if (c.max_steps > 0) eo.max_steps = c.max_steps;
    const std::string ckpt_path = path_in(dir, "checkpoint.rnls");
    const std::string series_path = path_in(dir, "series.csv");
    eo.on_record = [&](const EvolutionState& s, const DiagnosticsRecord& r) {
        series.push_back(r);
        if (!have_initial) {
            ck.initial = r;
            have_initial = true;
        }
        if (c.checkpoint_interval > 0 && s.steps > 0 && s.steps % c.checkpoint_interval == 0) {
            save_checkpoint({s, ck.initial}, ckpt_path);
            write_series(series, series_path);
        }
    };
    evolve(ck.state, ops, eo);
    save_checkpoint(ck, ckpt_path);
    write_series(series, series_path);

    const DiagnosticsRecord& r0 = ck.initial;
    double mass_drift = 0.0, energy_drift = 0.0, angular_drift = 0.0, virial_max = 0.0;
    for (const auto& r : series) {
        mass_drift = std::max(mass_drift, std::abs(r.mass - r0.mass) / r0.mass);
        energy_drift = std::max(energy_drift, std::abs(r.energy - r0.energy) / std::max(std::abs(r0.energy), 1e-300));
        angular_drift = std::max(angular_drift, std::abs(r.angular - r0.angular) / (std::abs(r0.angular) + 1.0));
        if (std::isfinite(r.virial_residual)) virial_max = std::max(virial_max, std::abs(r.virial_residual) / r0.J);
    }
    const EvolutionState& s = ck.state;
    KindResult res;
    res.results = {{"status", to_string(s.status)},
                   {"t_final", s.t},
                   {"steps", s.steps},
                   {"dt_final", s.dt},
                   {"refine_level", s.refine_level},
                   {"max_grad_ratio", s.max_grad_ratio},
                   {"t_detect", num(s.t_detect)},
                   {"records", series.size()},
                   {"verdict", verdict_json(classify_blowup(r0, prm))},
                   {"mass_drift", mass_drift},
                   {"energy_drift", energy_drift},
                   {"angular_drift", angular_drift},
                   {"virial_residual_max", virial_max}};
    if (prm.nonlinearity.kind == NonlinearityModel::Kind::inhomogeneous && prm.mass_critical() && series.size() > 1) {
        const DuhamelReport d = duhamel_variance_bound(series, prm);
        res.results["duhamel"] = {{"min_slack_over_J0", d.min_slack / r0.J},
                                  {"max_reconstruction_error", d.max_reconstruction_error}};
    }
    if (s.status == RunStatus::resolution_lost) res.exit_code = 3;
    return res;
}

KindResult run_sweep(const RunConfig& c, const std::string& dir, kernels::Exec exec) {
    const PhysicsParams prm = c.physics();
    SweepOptions so;
    so.run.n = c.n;
    so.run.half_extent = c.L;
    so.run.points = c.N;
    so.run.max_points = c.max_N;
    so.run.dt = c.dt;
    so.run.t_end = c.t_end;
    so.run.growth_bound = c.growth_bound;
    so.run.cadence = c.cadence;
    so.run.control = control_of(c);
    so.run.exec = exec;
    so.alpha = c.alpha;
    so.theta = c.theta;
    so.workers = c.workers;
    const SweepResult sw = c.experiment == ExperimentKind::inhomogeneous
                               ? inhomogeneous_threshold(prm, c.c_list, so)
                               : threshold_sweep(prm, data_family_from_string(c.family), c.c_list, so);

    KindResult res;
    json rows = json::array(), times = json::array();
    for (std::size_t k = 0; k < sw.rows.size(); ++k) {
        const SweepRow& row = sw.rows[k];
        const RunRecord& run = row.run;
        char name[32];
        std::snprintf(name, sizeof name, "row_%03zu.csv", k);
        write_series(run.series, (fs::path(dir) / "rows" / name).string());
        json j = {{"c", row.c},
                  {"family", to_string(row.family)},
                  {"verdict", verdict_json(run.verdict)},
                  {"outcome", to_string(run.outcome)},
                  {"status", to_string(run.status)},
                  {"t_detect", num(run.t_detect)},
                  {"t_stop", run.t_stop},
                  {"max_grad_ratio", run.max_grad_ratio},
                  {"max_grad_norm", run.max_grad_ratio * run.series.front().grad_norm},
                  {"max_sigma_ratio", run.max_sigma_ratio},
                  {"points", run.points},
                  {"attempts", run.attempts},
                  {"series", std::string("rows/") + name}};
        if (run.status == RunStatus::blowup_detected) {
            try {
                const RateFit f = blowup_rate_fit(run);
                j["rate_fit"] = {{"slope", f.slope},           {"residual", f.residual},
                                 {"samples", f.samples},       {"free_slope", f.free_slope},
                                 {"free_t_star", f.free_t_star}};
            } catch (const NumericalError& e) {
                j["rate_fit"] = {{"error", e.what()}};
            }
        }
        rows.push_back(j);
        times.push_back(run.runtime);
    }
    res.results = {{"unit_mass", sw.unit_mass},
                   {"monotone", sw.monotone()},
                   {"verdicts_confirmed", sw.verdicts_confirmed()},
                   {"transition", nullptr},
                   {"rows", rows}};
    if (const auto tr = sw.transition()) res.results["transition"] = {tr->first, tr->second};
    if (sw.mass_lambda_max) res.results["mass_lambda_max"] = *sw.mass_lambda_max;
    if (sw.mass_lambda_min) res.results["mass_lambda_min"] = *sw.mass_lambda_min;
    res.timing["row_seconds"] = times;
    return res;
}

KindResult run_stability(const RunConfig& c, const std::string& dir, kernels::Exec exec) {
    const PhysicsParams prm = c.physics();
    StabilityOptions so;
    so.half_extent = c.L;
    so.points = c.N;
    so.dt = c.dt;
    so.periods = c.periods;
    so.cadence = c.cadence;
    so.seed = c.seed;
    so.minimize.tol = c.tolerance;
    so.minimize.max_iterations = c.max_iterations;
    so.exec = exec;
    std::vector<Perturbation> dirs;
    for (const auto& d : c.directions) dirs.push_back(perturbation_from_string(d));
    const double norm = c.c * std::sqrt(reference_profile(c).mass);
    const StabilityResult st = stability_run(prm, norm, c.delta, dirs, so);

    std::string csv = "direction,delta,t,distance\n";
    json traces = json::array();
    for (const auto& tr : st.traces) {
        for (std::size_t i = 0; i < tr.t.size(); ++i)
            csv += tr.direction + "," + format_double(tr.delta) + "," + format_double(tr.t[i]) + "," +
                   format_double(tr.distance[i]) + "\n";
        traces.push_back({{"direction", tr.direction},
                          {"delta", tr.delta},
                          {"sup_distance", tr.sup_distance},
                          {"status", to_string(tr.status)}});
    }
    write_text_file(path_in(dir, "stability.csv"), csv);
    KindResult res;
    res.results = {{"mass", norm},
                   {"ground_energy", st.ground.energy},
                   {"ground_omega", st.ground.omega},
                   {"ground_residual", st.ground.residual},
                   {"sigma_norm_ground", st.sigma_norm_ground},
                   {"traces", traces}};
    return res;
}

KindResult run_vortex(const RunConfig& c, const std::string& dir) {
    const GridSpec g = make_grid(2, c.L, c.N);
    std::vector<int> ms;
    for (int m = c.m_min; m <= c.m_max; ++m) ms.push_back(m);
    const VortexResult v = vortex_counterexample(c.gamma, c.Omega, c.K, c.a, ms, g);
    std::string csv = "m,kinetic,trap,angular,interaction,energy,leading,tail,analytic,difference\n";
    for (const auto& r : v.rows) {
        csv += std::to_string(r.m);
        for (double x : {r.kinetic, r.trap, r.angular, r.interaction, r.energy, r.leading, r.tail, r.analytic,
                         r.difference})
            csv += "," + format_double(x);
        csv += "\n";
    }
    write_text_file(path_in(dir, "vortex.csv"), csv);
    double worst = 0.0;
    for (const auto& r : v.rows) worst = std::max(worst, std::abs(r.difference));
    KindResult res;
    res.results = {{"rows", v.rows.size()},
                   {"strictly_decreasing", v.strictly_decreasing()},
                   {"strictly_increasing", v.strictly_increasing()},
                   {"max_abs_difference", worst},
                   {"slope", c.m_max > c.m_min ? json(v.slope(c.m_min, c.m_max)) : json(nullptr)},
                   {"slope_reference", c.gamma - c.Omega}};
    return res;
}

}  // namespace

const char* code_version() { return RNLS_VERSION; }

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const NumericalError*>(&e)) return 3;
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return 4;
    return 1;
}

RunOutcome run_experiment(const RunConfig& cfg, const RunnerOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!opt.resume.empty() && cfg.experiment != ExperimentKind::evolve)
        throw ConfigError("--resume is only supported for evolve runs");
    RunConfig c = cfg;
    if (!opt.output.empty()) c.output = opt.output;
    const std::string echo = echo_config(c);
    std::error_code ec;
    fs::create_directories(c.output, ec);
    if (ec) throw IoError("cannot create output directory " + c.output + ": " + ec.message());
    write_text_file(path_in(c.output, "config.ini"), echo);

    KindResult kr;
    switch (c.experiment) {
        case ExperimentKind::groundstate: kr = run_groundstate(c, c.output, opt.exec); break;
        case ExperimentKind::evolve: kr = run_evolve(c, c.output, opt.resume, opt.exec); break;
        case ExperimentKind::sweep:
        case ExperimentKind::inhomogeneous: kr = run_sweep(c, c.output, opt.exec); break;
        case ExperimentKind::stability: kr = run_stability(c, c.output, opt.exec); break;
        case ExperimentKind::vortex: kr = run_vortex(c, c.output); break;
    }

    RunOutcome out;
    out.output_dir = c.output;
    out.exit_code = kr.exit_code;
    const json summary = {{"experiment", to_string(c.experiment)},
                          {"code_version", code_version()},
                          {"config_hash", sha256_hex(echo)},
                          {"config_file", "config.ini"},
                          {"timing_file", "timing.json"},
                          {"results", kr.results}};
    out.summary = summary.dump(2) + "\n";
    write_text_file(path_in(c.output, "summary.json"), out.summary);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json timing = kr.timing;
    timing["wall_seconds"] = out.wall_seconds;
    write_text_file(path_in(c.output, "timing.json"), timing.dump(2) + "\n");
    return out;
}

}  // namespace rnls
