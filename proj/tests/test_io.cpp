#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sys/wait.h>

#include "doctest.h"
#include "fields.hpp"
#include "json.hpp"
#include "rnls/config.hpp"
#include "rnls/io.hpp"
#include "rnls/runner.hpp"

using namespace rnls;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("rnls_test_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::string slurp(const fs::path& p) { return read_text_file(p.string()); }

const char* small_evolve =
    "experiment = evolve\n"
    "[grid]\nL = 8\nN = 64\n"
    "[physics]\nOmega = 0.5\n"
    "[initial]\ndata = gaussian\nc = 0.6\n"
    "[numerics]\ndt = 1e-3\nt_end = 0.1\ncadence = 10\n";

}  // namespace

TEST_CASE("minimal evolve config fills documented defaults") {
    const RunConfig c = parse_config("experiment = evolve\n[physics]\ngamma = 2\n");
    CHECK(c.experiment == ExperimentKind::evolve);
    CHECK(c.dt == Approx(1e-3 / 2.0));
    CHECK(c.t_end == Approx(std::numbers::pi));
    CHECK(c.N == 128);
    CHECK(c.cadence == 10);
    CHECK(c.nonlinearity == "power");

    const RunConfig s = parse_config("experiment = sweep\n[sweep]\nc_list = 0.9, 1.0\n");
    CHECK(s.L == 10.0);
    CHECK(s.dt == Approx(4e-3));
    CHECK(s.t_end == Approx(6 * std::numbers::pi));
    CHECK(s.c_list == std::vector<double>{0.9, 1.0});
    CHECK(parse_config("experiment = inhom\n[sweep]\nc_list = 1\n").nonlinearity == "inhomogeneous");
}

TEST_CASE("config validation names the key and line") {
    CHECK(error_of("experiment = evolve\n[physics]\ngamma = -1\n") == "line 3: gamma must be > 0");
    const std::string rot = error_of("experiment = groundstate\n[physics]\nOmega = 1.5\ngamma = 1.0\n");
    CHECK(rot.find("line 3") != std::string::npos);
    CHECK(rot.find("|Omega| < gamma") != std::string::npos);
    CHECK(error_of("experiment = evolve\n[physics]\ngama = 1\n") == "line 3: unknown key 'gama' in section [physics]");
    CHECK(error_of("experiment = evolve\n[phys]\n").find("unknown section [phys]") != std::string::npos);
    CHECK(error_of("[grid]\nN = 64\n") == "missing required key 'experiment'");
    CHECK(error_of("experiment = sweep\n").find("missing required key c_list") != std::string::npos);
    CHECK(error_of("experiment = evolve\n[grid]\nN = 100\n") == "line 3: N must be a power of two >= 8");
    CHECK(error_of("experiment = evolve\n[grid]\nL = abc\n") == "line 3: L: 'abc' is not a finite number");
    CHECK(error_of("experiment = evolve\n[grid]\nL = 1\nL = 2\n") == "line 4: duplicate key 'L'");
    CHECK(error_of("experiment = evolve\njunk\n") == "line 2: expected 'key = value', got 'junk'");
    CHECK(error_of("experiment = warp\n").find("unknown experiment 'warp'") != std::string::npos);
    CHECK(error_of("experiment = stability\n[stability]\ndirections = random, sideways\n").find("sideways") !=
          std::string::npos);
    CHECK(error_of("experiment = sweep\n[physics]\np = 2\n[sweep]\nc_list = 1\n").find("mass-critical") !=
          std::string::npos);
    CHECK(error_of("experiment = evolve\n[numerics]\ncadence = 10\nmax_steps = 15\n").find("multiple of cadence") !=
          std::string::npos);
    // comments and blank lines are ignored
    CHECK(error_of("# run\nexperiment = vortex ; trailing\n\n[physics]\nOmega = 1.5\n").empty());
}

TEST_CASE("config echo re-parses to the same config") {
    for (const char* text : {small_evolve, "experiment = sweep\n[sweep]\nc_list = 0.85, 0.9, 1.0\n",
                             "experiment = stability\n[physics]\nOmega = 0.5\n[stability]\ndirections = chirp\n",
                             "experiment = vortex\n[physics]\nOmega = 1.5\ngamma = 1\n[vortex]\nm_max = 7\n",
                             "experiment = inhom\n[physics]\nlambda0 = 1.5\ndecay = 3\n[sweep]\nc_list = 0.1\n"}) {
        CAPTURE(text);
        const RunConfig c = parse_config(text);
        const std::string echo = echo_config(c);
        CHECK(parse_config(echo) == c);
        CHECK(echo_config(parse_config(echo)) == echo);
    }
    RunConfig odd = parse_config(small_evolve);
    odd.dt = 0.1 + 0.2;
    CHECK(parse_config(echo_config(odd)).dt == odd.dt);
}

TEST_CASE("sha256 of a known string") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("checkpoint round trip is bit exact") {
    const fs::path dir = scratch("ckpt");
    const GridSpec g = make_grid(2, std::vector<double>{6.0, 7.0}, std::vector<std::size_t>{16, 32});
    PhysicsParams prm;
    prm.Omega = 0.3;
    prm.nonlinearity = NonlinearityModel::inhomogeneous(1.25, 2.0);
    Checkpoint ck;
    ck.state = EvolutionState(testfields::random_smooth(g, 11), prm, 1e-3, 0.125);
    ck.state.steps = 125;
    ck.state.grad_norm0 = 1.5;
    ck.state.max_grad_ratio = 2.5;
    ck.state.refine_level = 2;
    ck.state.refining = true;
    ck.initial.mass = 0.1 + 0.2;
    ck.initial.virial_residual = std::nan("");
    const std::string path = (dir / "a.rnls").string();
    save_checkpoint(ck, path);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back.state.field.grid == g);
    CHECK(std::memcmp(back.state.field.values.data(), ck.state.field.values.data(),
                      g.size() * sizeof(cplx)) == 0);
    CHECK(back.state.t == 0.125);
    CHECK(back.state.dt == 1e-3);
    CHECK(back.state.steps == 125);
    CHECK(back.state.refining);
    CHECK(back.state.refine_level == 2);
    CHECK(std::isnan(back.state.t_detect));
    CHECK(back.state.params.nonlinearity.kind == NonlinearityModel::Kind::inhomogeneous);
    CHECK(back.state.params.nonlinearity.lambda0 == 1.25);
    CHECK(back.state.params.Omega == 0.3);
    CHECK(back.initial.mass == 0.1 + 0.2);
    CHECK(std::isnan(back.initial.virial_residual));

    // save -> load -> save reproduces the file
    save_checkpoint(back, (dir / "b.rnls").string());
    CHECK(slurp(dir / "a.rnls") == slurp(dir / "b.rnls"));

    const std::string bytes = slurp(dir / "a.rnls");
    CHECK(bytes.substr(0, 4) == "RNLS");
    auto write = [&](const std::string& name, const std::string& b) {
        std::ofstream(dir / name, std::ios::binary) << b;
        return (dir / name).string();
    };
    CHECK_THROWS_WITH_AS(load_checkpoint(write("t.rnls", bytes.substr(0, bytes.size() - 8))),
                         doctest::Contains("truncated payload"), IoError);
    CHECK_THROWS_WITH_AS(load_checkpoint(write("h.rnls", bytes.substr(0, 30))), doctest::Contains("truncated header"),
                         IoError);
    std::string bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_WITH_AS(load_checkpoint(write("m.rnls", bad)), doctest::Contains("corrupt magic"), IoError);
    std::string ver = bytes;
    ver[4] = 2;
    CHECK_THROWS_WITH_AS(load_checkpoint(write("v.rnls", ver)), doctest::Contains("unsupported checkpoint version 2"),
                         IoError);
    CHECK_THROWS_WITH_AS(load_checkpoint(write("x.rnls", bytes + "x")), doctest::Contains("trailing bytes"), IoError);
    CHECK_THROWS_AS(load_checkpoint((dir / "missing.rnls").string()), IoError);

    Checkpoint general = ck;
    general.state.params.nonlinearity = NonlinearityModel::general([](double v) { return v; }, [](double) { return 1.0; }, 1.0);
    CHECK_THROWS_AS(save_checkpoint(general, (dir / "g.rnls").string()), IoError);
}

TEST_CASE("series CSV schema and exact round trip") {
    const fs::path dir = scratch("csv");
    DiagnosticsRecord r;
    r.t = 0.1;
    r.mass = 1.0 / 3.0;
    r.energy = -2.5e-17;
    r.virial_residual = std::nan("");
    r.tail_fraction = 5e-324;
    write_series({r}, (dir / "one.csv").string());
    const std::string text = slurp(dir / "one.csv");
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(text.substr(0, text.find('\n')) ==
          "t,mass,kinetic,trap,interaction,angular,energy,free_energy,J,dJ,virial_residual,grad_norm,sigma_norm,"
          "boundary_mass,tail_fraction");
    CHECK(series_columns().size() == 15);
    const auto back = read_series((dir / "one.csv").string());
    REQUIRE(back.size() == 1);
    CHECK(back[0].mass == r.mass);
    CHECK(back[0].t == r.t);
    CHECK(back[0].energy == r.energy);
    CHECK(back[0].tail_fraction == r.tail_fraction);
    CHECK(std::isnan(back[0].virial_residual));
    CHECK(format_double(0.1) == "0.10000000000000001");

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ud(-1e3, 1e3);
    std::vector<DiagnosticsRecord> many(50);
    for (auto& m : many) {
        std::array<double, 15> row;
        for (auto& v : row) v = ud(rng) * std::pow(10.0, static_cast<int>(ud(rng)) % 20);
        m = DiagnosticsRecord::from_row(row);
    }
    write_series(many, (dir / "many.csv").string());
    const auto many_back = read_series((dir / "many.csv").string());
    REQUIRE(many_back.size() == many.size());
    for (std::size_t i = 0; i < many.size(); ++i) CHECK(many_back[i].row() == many[i].row());

    CHECK_THROWS_AS(write_series({}, (dir / "none.csv").string()), ConfigError);
    std::ofstream(dir / "bad.csv") << "t,mass\n1,2\n";
    CHECK_THROWS_WITH_AS(read_series((dir / "bad.csv").string()), doctest::Contains("unexpected header"), IoError);
    std::ofstream(dir / "short.csv") << text.substr(0, text.find('\n') + 1) << "1,2,3\n";
    CHECK_THROWS_WITH_AS(read_series((dir / "short.csv").string()), doctest::Contains("expected 15"), IoError);
}

TEST_CASE("resumed evolution reproduces the uninterrupted run") {
    const fs::path root = scratch("resume");
    RunConfig c = parse_config(small_evolve);
    RunnerOptions full;
    full.output = (root / "full").string();
    run_experiment(c, full);

    RunConfig first = c;
    first.max_steps = 50;
    RunnerOptions part;
    part.output = (root / "part").string();
    run_experiment(first, part);
    const auto half = read_series((root / "part" / "series.csv").string());
    CHECK(load_checkpoint((root / "part" / "checkpoint.rnls").string()).state.steps == 50);
    CHECK(half.back().t == Approx(0.05));

    RunnerOptions resumed;
    resumed.output = (root / "part").string();
    resumed.resume = (root / "part" / "checkpoint.rnls").string();
    run_experiment(c, resumed);

    const auto a = read_series((root / "full" / "series.csv").string());
    const auto b = read_series((root / "part" / "series.csv").string());
    REQUIRE(a.size() == b.size());
    REQUIRE(a.size() == 11);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < 15; ++k) {
            const double x = a[i].row()[k], y = b[i].row()[k];
            if (std::isnan(x) && std::isnan(y)) continue;
            worst = std::max(worst, std::abs(x - y) / std::max(1.0, std::abs(x)));
        }
    CHECK(worst <= 1e-12);
    const auto sa = nlohmann::json::parse(slurp(root / "full" / "summary.json"));
    const auto sb = nlohmann::json::parse(slurp(root / "part" / "summary.json"));
    CHECK(sa["results"] == sb["results"]);

    // wrong grid for the checkpoint
    RunConfig other = c;
    other.N = 128;
    CHECK_THROWS_AS(run_experiment(other, resumed), ConfigError);
}

TEST_CASE("identical configs give byte-identical outputs, serial or parallel") {
    const fs::path root = scratch("determinism");
    const RunConfig c = parse_config(small_evolve);
    RunnerOptions o;
    o.output = (root / "run").string();
    const std::vector<std::string> files = {"summary.json", "series.csv", "config.ini", "checkpoint.rnls"};
    run_experiment(c, o);
    std::vector<std::string> first;
    for (const auto& f : files) first.push_back(slurp(root / "run" / f));
    o.exec = kernels::Exec::serial;
    run_experiment(c, o);
    for (std::size_t i = 0; i < files.size(); ++i) {
        CAPTURE(files[i]);
        CHECK(slurp(root / "run" / files[i]) == first[i]);
    }
    RunConfig echoed = c;
    echoed.output = o.output;
    CHECK(parse_config(slurp(root / "run" / "config.ini")) == echoed);
    const auto s = nlohmann::json::parse(first[0]);
    CHECK(s["config_hash"] == sha256_hex(first[2]));
    CHECK(s["code_version"] == code_version());
    CHECK(s["results"]["status"] == "finished");
    CHECK(s["results"]["mass_drift"].get<double>() <= 1e-10);
    CHECK(fs::exists(root / "run" / "timing.json"));
}

TEST_CASE("groundstate, vortex and sweep runs write their outputs") {
    const fs::path root = scratch("kinds");
    RunnerOptions o;
    o.output = (root / "gs").string();
    run_experiment(parse_config("experiment = groundstate\n[physics]\nOmega = 0.5\n[initial]\nc = 0.5\n"), o);
    auto s = nlohmann::json::parse(slurp(root / "gs" / "summary.json"));
    CHECK(s["results"]["converged"] == true);
    CHECK(s["results"]["residual"].get<double>() <= 1e-8);
    CHECK(load_checkpoint((root / "gs" / "groundstate.rnls").string()).state.field.grid.points(0) == 64);
    CHECK(fs::file_size(root / "gs" / "profile.tsv") > 0);

    o.output = (root / "vx").string();
    run_experiment(parse_config("experiment = vortex\n[physics]\nOmega = 1.5\n[grid]\nN = 128\n[vortex]\nm_max = 6\n"), o);
    s = nlohmann::json::parse(slurp(root / "vx" / "summary.json"));
    CHECK(s["results"]["strictly_decreasing"] == true);
    CHECK(s["results"]["rows"] == 7);
    CHECK(s["results"]["max_abs_difference"].get<double>() <= 1e-6);

    o.output = (root / "sw").string();
    run_experiment(parse_config("experiment = sweep\n[grid]\nN = 64\n[numerics]\nt_end = 0.5\nmax_N = 64\n"
                                "[sweep]\nfamily = gaussian\nc_list = 0.5\n"),
                   o);
    s = nlohmann::json::parse(slurp(root / "sw" / "summary.json"));
    CHECK(s["results"]["rows"][0]["outcome"] == "global");
    CHECK(read_series((root / "sw" / "rows" / "row_000.csv").string()).size() > 1);

    CHECK_THROWS_AS(run_experiment(parse_config("experiment = vortex\n"), [] {
        RunnerOptions r;
        r.resume = "x.rnls";
        return r;
    }()),
                    ConfigError);
}

TEST_CASE("exit codes by error kind") {
    CHECK(exit_code_for(ConfigError("x")) == 2);
    CHECK(exit_code_for(NumericalError("x")) == 3);
    CHECK(exit_code_for(IoError("x")) == 4);
    CHECK(exit_code_for(std::runtime_error("x")) == 1);
}

#ifdef RNLS_CLI_PATH
TEST_CASE("command line exit codes") {
    const fs::path root = scratch("cli");
    auto run = [&](const std::string& args) {
        const int status = std::system((std::string(RNLS_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    };
    std::ofstream(root / "ok.ini") << small_evolve;
    std::ofstream(root / "bad.ini") << "experiment = evolve\n[physics]\ngamma = -1\n";
    CHECK(run("evolve --config " + (root / "ok.ini").string() + " --out " + (root / "out").string()) == 0);
    CHECK(fs::exists(root / "out" / "series.csv"));
    CHECK(run("evolve --config " + (root / "bad.ini").string()) == 2);
    CHECK(run("sweep --config " + (root / "ok.ini").string()) == 2);
    CHECK(run("evolve --config " + (root / "missing.ini").string()) == 2);
    CHECK(run("evolve --config " + (root / "ok.ini").string() + " --out " + (root / "out").string() + " --resume " +
              (root / "nothing.rnls").string()) == 4);
    std::ofstream(root / "stall.ini") << "experiment = groundstate\n[numerics]\nmax_iterations = 2\n";
    CHECK(run("groundstate --config " + (root / "stall.ini").string() + " --out " + (root / "gs").string()) == 3);
    CHECK(run("") == 2);
}
#endif
