#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rnls/diagnostics.hpp"
#include "rnls/integrator.hpp"

namespace rnls {

constexpr std::uint32_t checkpoint_version = 1;

/// Checkpoint file, all little-endian:
///
///   "RNLS" | u32 version | u32 n | u64 N[3] | f64 L[3] | f64 t | f64 dt
///   | u64 header_bytes | header (UTF-8 JSON) | f64 re/im pairs, canonical node order
///
/// The JSON header carries the physics parameters and the monitor/tracker state
/// needed to continue bit-identically, plus the initial diagnostics record.
struct Checkpoint {
    EvolutionState state;
    DiagnosticsRecord initial;
};

/// Written to a temporary file and renamed into place. Throws IoError for
/// nonlinearities given by callbacks (not serializable) and on write failure.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
/// Throws IoError: "corrupt magic", "unsupported checkpoint version",
/// "truncated header", "truncated payload", "trailing bytes".
Checkpoint load_checkpoint(const std::string& path);

/// Column names of the time-series CSV, in order.
const std::array<const char*, 15>& series_columns();

/// Header line plus one line per record, 17 significant digits.
void write_series(const std::vector<DiagnosticsRecord>& records, const std::string& path);
std::string format_series(const std::vector<DiagnosticsRecord>& records);
/// Inverse of write_series; checks the header and the column count of every row.
std::vector<DiagnosticsRecord> read_series(const std::string& path);

/// 17 significant digits, locale-independent ("nan"/"inf" for non-finite values).
std::string format_double(double x);

/// Writes text to path (parent directories created), replacing it atomically.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace rnls
