#include "rnls/config.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "rnls/experiments.hpp"

namespace rnls {

namespace {

constexpr double pi = std::numbers::pi;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(x))
        throw ConfigError("'" + v + "' is not a finite number");
    return x;
}

long long to_integer(const std::string& v) {
    long long x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("'" + v + "' is not an integer");
    return x;
}

std::uint64_t to_count(const std::string& v) {
    const long long x = to_integer(v);
    if (x < 0) throw ConfigError("'" + v + "' must be non-negative");
    return static_cast<std::uint64_t>(x);
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError("'" + v + "' is not a boolean (true/false)");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        if (item.empty()) throw ConfigError("empty entry in list '" + v + "'");
        out.push_back(item);
    }
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"experiment", [](RunConfig& c, const std::string& v) { c.experiment = experiment_from_string(v); }},
        {"grid.n", [](RunConfig& c, const std::string& v) { c.n = static_cast<int>(to_integer(v)); }},
        {"grid.L", [](RunConfig& c, const std::string& v) { c.L = to_double(v); }},
        {"grid.N", [](RunConfig& c, const std::string& v) { c.N = to_count(v); }},
        {"physics.Omega", [](RunConfig& c, const std::string& v) { c.Omega = to_double(v); }},
        {"physics.gamma", [](RunConfig& c, const std::string& v) { c.gamma = to_double(v); }},
        {"physics.p", [](RunConfig& c, const std::string& v) { c.p = to_double(v); }},
        {"physics.kappa", [](RunConfig& c, const std::string& v) { c.kappa = static_cast<int>(to_integer(v)); }},
        {"physics.nonlinearity", [](RunConfig& c, const std::string& v) { c.nonlinearity = v; }},
        {"physics.lambda", [](RunConfig& c, const std::string& v) { c.lambda = to_double(v); }},
        {"physics.lambda0", [](RunConfig& c, const std::string& v) { c.lambda0 = to_double(v); }},
        {"physics.decay", [](RunConfig& c, const std::string& v) { c.decay = to_double(v); }},
        {"initial.data", [](RunConfig& c, const std::string& v) { c.data = v; }},
        {"initial.c", [](RunConfig& c, const std::string& v) { c.c = to_double(v); }},
        {"initial.alpha", [](RunConfig& c, const std::string& v) { c.alpha = to_double(v); }},
        {"initial.theta", [](RunConfig& c, const std::string& v) { c.theta = to_double(v); }},
        {"initial.nu", [](RunConfig& c, const std::string& v) { c.nu = to_double(v); }},
        {"numerics.dt", [](RunConfig& c, const std::string& v) { c.dt = to_double(v); }},
        {"numerics.t_end", [](RunConfig& c, const std::string& v) { c.t_end = to_double(v); }},
        {"numerics.cadence", [](RunConfig& c, const std::string& v) { c.cadence = to_count(v); }},
        {"numerics.seed", [](RunConfig& c, const std::string& v) { c.seed = to_count(v); }},
        {"numerics.refine_trigger", [](RunConfig& c, const std::string& v) { c.refine_trigger = to_double(v); }},
        {"numerics.detect_ratio", [](RunConfig& c, const std::string& v) { c.detect_ratio = to_double(v); }},
        {"numerics.tail_limit", [](RunConfig& c, const std::string& v) { c.tail_limit = to_double(v); }},
        {"numerics.refine", [](RunConfig& c, const std::string& v) { c.refine = to_bool(v); }},
        {"numerics.growth_bound", [](RunConfig& c, const std::string& v) { c.growth_bound = to_double(v); }},
        {"numerics.max_N", [](RunConfig& c, const std::string& v) { c.max_N = to_count(v); }},
        {"numerics.tolerance", [](RunConfig& c, const std::string& v) { c.tolerance = to_double(v); }},
        {"numerics.max_iterations",
         [](RunConfig& c, const std::string& v) { c.max_iterations = static_cast<int>(to_integer(v)); }},
        {"numerics.max_steps", [](RunConfig& c, const std::string& v) { c.max_steps = to_count(v); }},
        {"sweep.family", [](RunConfig& c, const std::string& v) { c.family = v; }},
        {"sweep.c_list",
         [](RunConfig& c, const std::string& v) {
             c.c_list.clear();
             for (const auto& s : split_list(v)) c.c_list.push_back(to_double(s));
         }},
        {"sweep.workers", [](RunConfig& c, const std::string& v) { c.workers = static_cast<unsigned>(to_count(v)); }},
        {"stability.delta", [](RunConfig& c, const std::string& v) { c.delta = to_double(v); }},
        {"stability.directions", [](RunConfig& c, const std::string& v) { c.directions = split_list(v); }},
        {"stability.periods", [](RunConfig& c, const std::string& v) { c.periods = to_double(v); }},
        {"vortex.K", [](RunConfig& c, const std::string& v) { c.K = to_double(v); }},
        {"vortex.a", [](RunConfig& c, const std::string& v) { c.a = to_double(v); }},
        {"vortex.m_min", [](RunConfig& c, const std::string& v) { c.m_min = static_cast<int>(to_integer(v)); }},
        {"vortex.m_max", [](RunConfig& c, const std::string& v) { c.m_max = static_cast<int>(to_integer(v)); }},
        {"io.output", [](RunConfig& c, const std::string& v) { c.output = v; }},
        {"io.checkpoint_interval", [](RunConfig& c, const std::string& v) { c.checkpoint_interval = to_count(v); }},
    };
    return table;
}

bool is_power_of_two(std::size_t v) { return v >= 8 && (v & (v - 1)) == 0; }

class Validator {
public:
    explicit Validator(const std::map<std::string, int>& lines) : lines_(lines) {}

    void require(bool ok, const std::string& key, const std::string& message) const {
        if (ok) return;
        const auto it = lines_.find(key);
        if (it != lines_.end()) throw ConfigError("line " + std::to_string(it->second) + ": " + message);
        throw ConfigError(message + " (key " + key + ")");
    }

private:
    const std::map<std::string, int>& lines_;
};

void fill_defaults(RunConfig& c, const std::set<std::string>& seen) {
    auto unset = [&](const char* key) { return !seen.count(key); };
    const double period = 2.0 * pi / c.gamma;
    switch (c.experiment) {
        case ExperimentKind::groundstate:
            if (unset("grid.N")) c.N = 64;
            break;
        case ExperimentKind::evolve:
            if (unset("numerics.dt")) c.dt = 1e-3 / c.gamma;
            if (unset("numerics.t_end")) c.t_end = period;
            break;
        case ExperimentKind::sweep:
        case ExperimentKind::inhomogeneous:
            if (unset("grid.L")) c.L = 10.0;
            if (unset("numerics.dt")) c.dt = 4e-3 / c.gamma;
            if (unset("numerics.t_end")) c.t_end = 3.0 * period;
            if (c.experiment == ExperimentKind::inhomogeneous && unset("physics.nonlinearity"))
                c.nonlinearity = "inhomogeneous";
            break;
        case ExperimentKind::stability:
            if (unset("grid.N")) c.N = 64;
            if (unset("numerics.dt")) c.dt = 5e-3 / c.gamma;
            if (unset("numerics.cadence")) c.cadence = 20;
            if (unset("numerics.t_end")) c.t_end = c.periods * period;
            break;
        case ExperimentKind::vortex:
            if (unset("grid.L")) c.L = 12.0;
            if (unset("grid.N")) c.N = 256;
            break;
    }
    if (unset("numerics.dt") && c.dt == 0.0) c.dt = 1e-3 / c.gamma;
    if (unset("numerics.t_end") && c.t_end == 0.0) c.t_end = period;
}

void validate(const RunConfig& c, const std::map<std::string, int>& lines) {
    const Validator v(lines);
    v.require(c.n == 2 || c.n == 3, "grid.n", "n must be 2 or 3");
    v.require(c.L > 0.0, "grid.L", "L must be > 0");
    v.require(is_power_of_two(c.N), "grid.N", "N must be a power of two >= 8");
    v.require(c.gamma > 0.0, "physics.gamma", "gamma must be > 0");
    v.require(c.p >= 1.0, "physics.p", "p must be >= 1");
    v.require(c.kappa == 1 || c.kappa == -1, "physics.kappa", "kappa must be +1 or -1");
    v.require(c.nonlinearity == "power" || c.nonlinearity == "inhomogeneous", "physics.nonlinearity",
              "nonlinearity must be power or inhomogeneous");
    v.require(c.lambda > 0.0, "physics.lambda", "lambda must be > 0");
    v.require(c.lambda0 > 0.0, "physics.lambda0", "lambda0 must be > 0");
    v.require(c.decay > 0.0, "physics.decay", "decay must be > 0");
    v.require(c.data == "gaussian" || c.data == "scaled-Q", "initial.data", "data must be gaussian or scaled-Q");
    v.require(c.c > 0.0, "initial.c", "c must be > 0");
    v.require(c.alpha > 0.0, "initial.alpha", "alpha must be > 0");
    v.require(c.dt > 0.0, "numerics.dt", "dt must be > 0");
    v.require(c.t_end > 0.0, "numerics.t_end", "t_end must be > 0");
    v.require(c.cadence >= 1, "numerics.cadence", "cadence must be >= 1");
    v.require(c.refine_trigger > 1.0, "numerics.refine_trigger", "refine_trigger must be > 1");
    v.require(c.detect_ratio > c.refine_trigger, "numerics.detect_ratio", "detect_ratio must exceed refine_trigger");
    v.require(c.tail_limit > 0.0 && c.tail_limit < 1.0, "numerics.tail_limit", "tail_limit must lie in (0, 1)");
    v.require(c.growth_bound > 1.0, "numerics.growth_bound", "growth_bound must be > 1");
    v.require(is_power_of_two(c.max_N) && c.max_N >= c.N, "numerics.max_N", "max_N must be a power of two >= N");
    v.require(c.tolerance > 0.0, "numerics.tolerance", "tolerance must be > 0");
    v.require(c.max_iterations >= 1, "numerics.max_iterations", "max_iterations must be >= 1");
    v.require(c.family == "scaled-Q" || c.family == "gaussian", "sweep.family", "family must be scaled-Q or gaussian");
    for (double x : c.c_list) v.require(x > 0.0, "sweep.c_list", "c_list entries must be > 0");
    v.require(c.workers >= 1, "sweep.workers", "workers must be >= 1");
    v.require(c.delta >= 0.0 && c.delta <= 0.1, "stability.delta", "delta must lie in [0, 0.1]");
    for (const auto& d : c.directions)
        v.require(d == "random" || d == "dipole" || d == "chirp", "stability.directions",
                  "unknown direction '" + d + "' (expected random, dipole or chirp)");
    v.require(c.periods > 0.0, "stability.periods", "periods must be > 0");
    v.require(c.K >= 0.0, "vortex.K", "K must be >= 0");
    v.require(c.a > 2.0, "vortex.a", "a must be > 2");
    v.require(c.m_min <= c.m_max, "vortex.m_max", "m_max must be >= m_min");
    v.require(c.m_min >= -40 && c.m_max <= 40, "vortex.m_max", "|m| must be <= 40");
    v.require(!c.output.empty(), "io.output", "output must not be empty");

    const bool needs_trap_bound =
        c.experiment == ExperimentKind::groundstate || c.experiment == ExperimentKind::stability;
    v.require(!needs_trap_bound || std::abs(c.Omega) < c.gamma, "physics.Omega",
              to_string(c.experiment) + " requires |Omega| < gamma (got Omega = " + std::to_string(c.Omega) +
                  ", gamma = " + std::to_string(c.gamma) + ")");
    const bool sweep = c.experiment == ExperimentKind::sweep || c.experiment == ExperimentKind::inhomogeneous;
    if (sweep) {
        v.require(!c.c_list.empty(), "sweep.c_list", "missing required key c_list in [sweep]");
        v.require(std::abs(c.p - (1.0 + 4.0 / c.n)) < 1e-12, "physics.p", "sweeps need the mass-critical p = 1 + 4/n");
        v.require(c.kappa == 1, "physics.kappa", "sweeps need kappa = +1");
    }
    if (c.experiment == ExperimentKind::sweep)
        v.require(c.nonlinearity == "power", "physics.nonlinearity", "sweep needs nonlinearity = power");
    if (c.experiment == ExperimentKind::inhomogeneous)
        v.require(c.nonlinearity == "inhomogeneous", "physics.nonlinearity",
                  "inhomogeneous experiment needs nonlinearity = inhomogeneous");
    if (c.experiment == ExperimentKind::vortex) v.require(c.n == 2, "grid.n", "vortex states need n = 2");
    if (c.experiment == ExperimentKind::evolve)
        v.require(c.checkpoint_interval % c.cadence == 0, "io.checkpoint_interval",
                  "checkpoint_interval must be a multiple of cadence");
    if (c.experiment == ExperimentKind::evolve)
        v.require(c.max_steps % c.cadence == 0, "numerics.max_steps", "max_steps must be a multiple of cadence");
    if (c.experiment != ExperimentKind::vortex) {
        try {
            c.physics().validate();
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("[physics]: ") + e.what());
        }
    }
}

}  // namespace

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::groundstate: return "groundstate";
        case ExperimentKind::evolve: return "evolve";
        case ExperimentKind::sweep: return "sweep";
        case ExperimentKind::stability: return "stability";
        case ExperimentKind::vortex: return "vortex";
        case ExperimentKind::inhomogeneous: return "inhomogeneous";
    }
    return "evolve";
}

ExperimentKind experiment_from_string(const std::string& s) {
    if (s == "groundstate") return ExperimentKind::groundstate;
    if (s == "evolve") return ExperimentKind::evolve;
    if (s == "sweep") return ExperimentKind::sweep;
    if (s == "stability") return ExperimentKind::stability;
    if (s == "vortex") return ExperimentKind::vortex;
    if (s == "inhom" || s == "inhomogeneous") return ExperimentKind::inhomogeneous;
    throw ConfigError("unknown experiment '" + s + "'");
}

PhysicsParams RunConfig::physics() const {
    PhysicsParams prm;
    prm.Omega = Omega;
    prm.gamma = gamma;
    prm.p = p;
    prm.n = n;
    prm.kappa = kappa;
    prm.nonlinearity = nonlinearity == "inhomogeneous" ? NonlinearityModel::inhomogeneous(lambda0, decay)
                                                       : NonlinearityModel::power(lambda);
    return prm;
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::map<std::string, int> lines;
    std::string section;
    std::istringstream in(text);
    int line_no = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        std::string line = raw;
        if (const auto hash = line.find_first_of("#;"); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            static const std::set<std::string> sections = {"grid",      "physics", "initial", "numerics",
                                                           "sweep",     "stability", "vortex", "io"};
            if (!sections.count(section)) throw ConfigError(where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string full = section.empty() ? key : section + "." + key;
        const auto it = setters().find(full);
        if (it == setters().end()) {
            throw ConfigError(where + "unknown key '" + key + "'" +
                              (section.empty() ? std::string(" at top level") : " in section [" + section + "]"));
        }
        if (seen.count(full)) throw ConfigError(where + "duplicate key '" + key + "'");
        if (value.empty()) throw ConfigError(where + "missing value for key '" + key + "'");
        try {
            it->second(cfg, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + key + ": " + e.what());
        }
        seen.insert(full);
        lines[full] = line_no;
    }
    if (!seen.count("experiment")) throw ConfigError("missing required key 'experiment'");
    fill_defaults(cfg, seen);
    validate(cfg, lines);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string echo_config(const RunConfig& c) {
    std::ostringstream os;
    os << std::setprecision(17);
    auto list = [](const auto& xs) {
        std::ostringstream s;
        s << std::setprecision(17);
        for (std::size_t i = 0; i < xs.size(); ++i) s << (i ? ", " : "") << xs[i];
        return s.str();
    };
    os << "experiment = " << to_string(c.experiment) << "\n";
    os << "\n[grid]\nn = " << c.n << "\nL = " << c.L << "\nN = " << c.N << "\n";
    os << "\n[physics]\nOmega = " << c.Omega << "\ngamma = " << c.gamma << "\np = " << c.p << "\nkappa = " << c.kappa
       << "\nnonlinearity = " << c.nonlinearity << "\nlambda = " << c.lambda << "\nlambda0 = " << c.lambda0
       << "\ndecay = " << c.decay << "\n";
    os << "\n[initial]\ndata = " << c.data << "\nc = " << c.c << "\nalpha = " << c.alpha << "\ntheta = " << c.theta
       << "\nnu = " << c.nu << "\n";
    os << "\n[numerics]\ndt = " << c.dt << "\nt_end = " << c.t_end << "\ncadence = " << c.cadence
       << "\nseed = " << c.seed << "\nrefine_trigger = " << c.refine_trigger << "\ndetect_ratio = " << c.detect_ratio
       << "\ntail_limit = " << c.tail_limit << "\nrefine = " << (c.refine ? "true" : "false")
       << "\ngrowth_bound = " << c.growth_bound << "\nmax_N = " << c.max_N << "\ntolerance = " << c.tolerance
       << "\nmax_iterations = " << c.max_iterations << "\nmax_steps = " << c.max_steps << "\n";
    os << "\n[sweep]\nfamily = " << c.family << "\n";
    if (!c.c_list.empty()) os << "c_list = " << list(c.c_list) << "\n";
    os << "workers = " << c.workers << "\n";
    os << "\n[stability]\ndelta = " << c.delta << "\n";
    if (!c.directions.empty()) os << "directions = " << list(c.directions) << "\n";
    os << "periods = " << c.periods << "\n";
    os << "\n[vortex]\nK = " << c.K << "\na = " << c.a << "\nm_min = " << c.m_min << "\nm_max = " << c.m_max << "\n";
    os << "\n[io]\noutput = " << c.output << "\ncheckpoint_interval = " << c.checkpoint_interval << "\n";
    return os.str();
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("SHA-256 digest failed");
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(digest[i]);
    return os.str();
}

}  // namespace rnls
