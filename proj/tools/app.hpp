#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "maxperiodic/surface.hpp"

namespace maxperiodic::app {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct MeshConfig {
    double h = 0.05;        // coarsest grid; refinements halve it
    int refinements = 3;
    double x2_margin = 0.6;
    double cone_exclusion = 0.2;
    int ring_angles = 48;
    int threads = 0;
};

struct Tolerances {
    double quadrature = 1e-12;
    double abel = 1e-7;
    double tracking = 1e-11;
    double closure = 1e-6;
    double certificate = 1e-7;   // |g| on slits, phi3 antisymmetry, mesh normals
    double conformality = 1e-9;
    int certificate_samples = 1000;
};

struct DivisorConfig {
    bool solve = true;
    int section = 1;
    std::vector<cplx> points;  // plus-sheet positions when explicit
};

struct ScanPoint {
    std::vector<double> branch;
    cplx e = 0;
    int section = 1;
};

struct ScanConfig {
    std::vector<ScanPoint> points;
    double step = 1e-5;
    double rank_tol = 1e-7;
};

struct Config {
    int version = kSchemaVersion;
    std::optional<int> genus;
    std::vector<double> branch;
    cplx e = 0;
    DivisorConfig divisor;
    domain::MinkowskiVector q0;
    int eps0 = 1;
    MeshConfig mesh;
    Tolerances tol;
    std::string out_dir = "out";
    int replicas = 1;
    bool normalize_e1_height = false;
    surface::catenoid::Spec catenoid;
    ScanConfig scan;

    json raw;          // effective configuration (after command-line overrides)
    std::string hash;  // of the canonical dump of `raw`

    int n() const { return static_cast<int>(branch.size()) / 2 - 1; }
};

// FNV-1a 64 of the canonical (key-sorted, compact) dump, as 16 hex digits.
std::string config_hash(const json& j);

// Throws ValidationError on schema violations, unknown keys or bad values.
Config parse_config(const json& j);
Config load_config(const std::string& path, std::optional<int> replicas = std::nullopt,
                   bool normalize_e1_height = false, std::optional<std::string> out_dir = std::nullopt);

// RFC-4180 field quoting.
std::string csv_field(const std::string& s);

struct Outcome {
    int code = 0;
    json report;
};

// Commands write their artifacts into cfg.out_dir and return the report.  Library errors propagate
// as maxperiodic::Error; threshold failures set code 5.
Outcome cmd_validate(const Config& cfg);
Outcome cmd_periods(const Config& cfg);
Outcome cmd_spinors(const Config& cfg);
Outcome cmd_build(const Config& cfg);
Outcome cmd_catenoid(const Config& cfg);
Outcome cmd_moduli_scan(const Config& cfg);

const std::vector<std::string>& command_names();
Outcome run_command(const std::string& name, const Config& cfg);

// Full front end: loads the config, runs the command, writes error.json on failure and returns the
// process exit code.  Messages go to `log`.
int main_entry(const std::string& command, const std::string& config_path, std::optional<std::string> out_dir,
               std::optional<int> replicas, bool normalize_e1_height, std::ostream& log);

}  // namespace maxperiodic::app
