#include "rnls/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace rnls {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// JSON has no NaN; store non-finite values as null and read null back as NaN.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
double num(const json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

json params_to_json(const PhysicsParams& p) {
    const NonlinearityModel& m = p.nonlinearity;
    if (m.kind == NonlinearityModel::Kind::general || m.radial_lambda)
        throw IoError("checkpoint: nonlinearity '" + m.describe() + "' is given by callbacks and cannot be saved");
    return {{"Omega", p.Omega},
            {"gamma", p.gamma},
            {"p", p.p},
            {"n", p.n},
            {"kappa", p.kappa},
            {"nonlinearity",
             {{"kind", m.kind == NonlinearityModel::Kind::power ? "power" : "inhomogeneous"},
              {"lambda", m.lambda},
              {"lambda0", m.lambda0},
              {"decay", m.decay}}}};
}

PhysicsParams params_from_json(const json& j) {
    PhysicsParams p;
    p.Omega = j.at("Omega");
    p.gamma = j.at("gamma");
    p.p = j.at("p");
    p.n = j.at("n");
    p.kappa = j.at("kappa");
    const json& m = j.at("nonlinearity");
    const std::string kind = m.at("kind");
    if (kind == "power")
        p.nonlinearity = NonlinearityModel::power(m.at("lambda"));
    else if (kind == "inhomogeneous")
        p.nonlinearity = NonlinearityModel::inhomogeneous(m.at("lambda0"), m.at("decay"));
    else
        throw IoError("checkpoint: unknown nonlinearity kind '" + kind + "'");
    return p;
}

json record_to_json(const DiagnosticsRecord& r) {
    json row = json::array();
    for (double v : r.row()) row.push_back(num(v));
    return {{"row", row},
            {"lz_expectation", r.lz_expectation},
            {"lz_imaginary", r.lz_imaginary},
            {"weighted_lpp", r.weighted_lpp},
            {"slope_lpp", r.slope_lpp}};
}

DiagnosticsRecord record_from_json(const json& j) {
    std::array<double, 15> row{};
    const json& a = j.at("row");
    if (a.size() != row.size()) throw IoError("checkpoint: initial record has wrong length");
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = num(a[i]);
    DiagnosticsRecord r = DiagnosticsRecord::from_row(row);
    r.lz_expectation = j.at("lz_expectation");
    r.lz_imaginary = j.at("lz_imaginary");
    r.weighted_lpp = j.at("weighted_lpp");
    r.slope_lpp = j.at("slope_lpp");
    return r;
}

template <class T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    Reader(const std::string& bytes, const std::string& path) : b_(bytes), path_(path) {}

    template <class T>
    T get(const char* what) {
        if (pos_ + sizeof(T) > b_.size()) throw IoError(path_ + ": " + what);
        T v;
        std::memcpy(&v, b_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::string bytes(std::size_t n, const char* what) {
        if (n > b_.size() - pos_) throw IoError(path_ + ": " + what);
        std::string s = b_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const { return b_.size() - pos_; }

private:
    const std::string& b_;
    const std::string& path_;
    std::size_t pos_ = 0;
};

}  // namespace

void write_text_file(const std::string& path, const std::string& text) {
    const fs::path target(path);
    std::error_code ec;
    if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + target.parent_path().string() + ": " + ec.message());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.flush();
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " to " + path + ": " + ec.message());
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    const EvolutionState& s = ckpt.state;
    const GridSpec& g = s.field.grid;
    json header = {{"params", params_to_json(s.params)},
                   {"steps", s.steps},
                   {"status", to_string(s.status)},
                   {"grad_norm0", s.grad_norm0},
                   {"grad_ratio", s.grad_ratio},
                   {"max_grad_ratio", s.max_grad_ratio},
                   {"tail", s.tail},
                   {"refining", s.refining},
                   {"refine_level", s.refine_level},
                   {"t_detect", num(s.t_detect)},
                   {"tracker_ready", s.tracker_ready},
                   {"tracker", json::array()},
                   {"initial", record_to_json(ckpt.initial)}};
    if (s.tracker_ready)
        for (double v : s.tracker.state()) header["tracker"].push_back(num(v));
    const std::string blob = header.dump();

    std::string out;
    out.reserve(96 + blob.size() + 16 * g.size());
    out.append("RNLS", 4);
    put<std::uint32_t>(out, checkpoint_version);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.dim()));
    for (int a = 0; a < 3; ++a) put<std::uint64_t>(out, g.points(a));
    for (int a = 0; a < 3; ++a) put<double>(out, g.half_extent(a));
    put<double>(out, s.t);
    put<double>(out, s.dt);
    put<std::uint64_t>(out, blob.size());
    out += blob;
    for (const cplx& z : s.field.values) {
        put<double>(out, z.real());
        put<double>(out, z.imag());
    }
    write_text_file(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
    const std::string bytes = read_text_file(path);
    Reader rd(bytes, path);
    if (bytes.size() < 4 || bytes.compare(0, 4, "RNLS") != 0) throw IoError(path + ": corrupt magic");
    rd.bytes(4, "corrupt magic");
    const auto version = rd.get<std::uint32_t>("truncated header");
    if (version != checkpoint_version)
        throw IoError(path + ": unsupported checkpoint version " + std::to_string(version) + " (expected " +
                      std::to_string(checkpoint_version) + ")");
    const auto n = rd.get<std::uint32_t>("truncated header");
    std::array<std::size_t, 3> pts{};
    std::array<double, 3> ext{};
    for (auto& v : pts) v = rd.get<std::uint64_t>("truncated header");
    for (auto& v : ext) v = rd.get<double>("truncated header");
    const double t = rd.get<double>("truncated header");
    const double dt = rd.get<double>("truncated header");
    const auto blob_len = rd.get<std::uint64_t>("truncated header");
    const std::string blob = rd.bytes(blob_len, "truncated header");

    GridSpec g;
    try {
        g = make_grid(static_cast<int>(n), std::span<const double>(ext.data(), n),
                      std::span<const std::size_t>(pts.data(), n));
    } catch (const ConfigError& e) {
        throw IoError(path + ": invalid grid in header: " + e.what());
    }
    if (rd.remaining() < 16 * g.size()) throw IoError(path + ": truncated payload");
    if (rd.remaining() > 16 * g.size()) throw IoError(path + ": trailing bytes after payload");

    json header;
    try {
        header = json::parse(blob);
    } catch (const json::exception& e) {
        throw IoError(path + ": header is not valid JSON: " + e.what());
    }
    Checkpoint ck;
    try {
        EvolutionState& s = ck.state;
        s.params = params_from_json(header.at("params"));
        s.t = t;
        s.dt = dt;
        s.steps = header.at("steps");
        s.status = run_status_from_string(header.at("status"));
        s.grad_norm0 = header.at("grad_norm0");
        s.grad_ratio = header.at("grad_ratio");
        s.max_grad_ratio = header.at("max_grad_ratio");
        s.tail = header.at("tail");
        s.refining = header.at("refining");
        s.refine_level = header.at("refine_level");
        s.t_detect = num(header.at("t_detect"));
        s.tracker_ready = header.at("tracker_ready");
        if (s.tracker_ready) {
            std::vector<double> tr;
            for (const auto& v : header.at("tracker")) tr.push_back(num(v));
            s.tracker.restore(tr);
        }
        ck.initial = record_from_json(header.at("initial"));
    } catch (const json::exception& e) {
        throw IoError(path + ": malformed header: " + e.what());
    } catch (const ConfigError& e) {
        throw IoError(path + ": malformed header: " + e.what());
    }
    ck.state.field = WaveField(g);
    for (auto& z : ck.state.field.values) {
        const double re = rd.get<double>("truncated payload");
        const double im = rd.get<double>("truncated payload");
        z = {re, im};
    }
    return ck;
}

const std::array<const char*, 15>& series_columns() {
    static const std::array<const char*, 15> cols = {
        "t", "mass",      "kinetic",         "trap",      "interaction", "angular",    "energy",       "free_energy",
        "J", "dJ",        "virial_residual", "grad_norm", "sigma_norm",  "boundary_mass", "tail_fraction"};
    return cols;
}

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::string format_series(const std::vector<DiagnosticsRecord>& records) {
    if (records.empty()) throw ConfigError("write_series needs at least one record");
    std::string out;
    for (std::size_t i = 0; i < series_columns().size(); ++i) {
        if (i) out += ',';
        out += series_columns()[i];
    }
    out += '\n';
    for (const auto& r : records) {
        const auto row = r.row();
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_double(row[i]);
        }
        out += '\n';
    }
    return out;
}

void write_series(const std::vector<DiagnosticsRecord>& records, const std::string& path) {
    write_text_file(path, format_series(records));
}

std::vector<DiagnosticsRecord> read_series(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty series file");
    std::string expected;
    for (std::size_t i = 0; i < series_columns().size(); ++i) expected += (i ? "," : "") + std::string(series_columns()[i]);
    if (line != expected) throw IoError(path + ": unexpected header '" + line + "'");
    std::vector<DiagnosticsRecord> out;
    for (int line_no = 2; std::getline(in, line); ++line_no) {
        if (line.empty()) continue;
        std::array<double, 15> row{};
        std::size_t col = 0, pos = 0;
        while (true) {
            const std::size_t end = std::min(line.find(',', pos), line.size());
            if (col >= row.size()) throw IoError(path + ": line " + std::to_string(line_no) + " has too many columns");
            const char* b = line.data() + pos;
            const char* e = line.data() + end;
            const auto res = std::from_chars(b, e, row[col]);
            if (res.ec != std::errc() || res.ptr != e)
                throw IoError(path + ": line " + std::to_string(line_no) + ": bad number in column " +
                              series_columns()[col]);
            ++col;
            if (end == line.size()) break;
            pos = end + 1;
        }
        if (col != row.size())
            throw IoError(path + ": line " + std::to_string(line_no) + " has " + std::to_string(col) +
                          " columns, expected 15");
        out.push_back(DiagnosticsRecord::from_row(row));
    }
    return out;
}

}  // namespace rnls
