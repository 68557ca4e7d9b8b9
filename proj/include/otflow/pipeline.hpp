#pragma once

#include "otflow/mmspace.hpp"
#include "otflow/presets.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace otflow {

struct FieldSpec {
    std::string kind = "cosine_mode";  // preset name or "file"
    PresetParams params;
    std::filesystem::path file;
};

/// Flat `key = value` file, `#` comments. Keys:
///   space.kind circle|box|path|file, space.n, space.side, space.norm, space.file
///   field.kind, field.<param>, field.file; target.* likewise (second field of brenier,
///   convexity, horver and dw2; uniform by default)
///   flow.kind heat|jko|both|none, flow.backend, flow.tau, flow.steps
///   diag.list (comma separated), diag.C, diag.K, diag.slices, diag.eps
///   tol.<label> overrides the tolerance of that label in every report
///   run.seed, run.out
struct RunConfig {
    std::string space_kind = "circle";
    std::size_t space_n = 64;
    std::size_t space_side = 11;
    Norm space_norm = Norm::euclidean;
    std::filesystem::path space_file;

    FieldSpec field;
    FieldSpec target{"constant", {}, {}};

    std::string flow_kind = "none";
    std::string backend = "quadratic";
    double tau = 1e-3;
    std::size_t steps = 10;

    std::vector<std::string> diagnostics;
    double C = 2.0;
    double K = 0.0;
    std::size_t slices = 8;
    double eps = 1e-3;
    std::map<std::string, double> tolerance_overrides;

    std::uint64_t seed = 1;
    std::filesystem::path out = "run";

    /// Canonical text of the parsed config, hashed into the manifest.
    std::string canonical;
};

/// Parses and validates; relative file paths resolve against base_dir. Throws ConfigError.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

struct RunResult {
    int exit_code = 0;
    std::filesystem::path manifest;
    std::map<std::string, bool> passes;
};

/// space -> field -> flows -> diagnostics. Writes manifest.json (digests of every artifact)
/// and timings.json (wall times, kept out of the manifest). Exit 0 iff every report passes.
/// Module errors propagate.
RunResult run_pipeline(const RunConfig& config);

/// Version string of the library.
std::string version();

}  // namespace otflow
