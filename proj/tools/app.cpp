#include "app.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

namespace maxperiodic::app {

namespace fs = std::filesystem;
using domain::MinkowskiVector;

namespace {

using clk = std::chrono::steady_clock;
double seconds_since(clk::time_point t) { return std::chrono::duration<double>(clk::now() - t).count(); }

// ---------- schema helpers ----------

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ValidationError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ValidationError(where + ": unknown key '" + it.key() + "'");
    }
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ValidationError(where + ": expected a number");
    return v.get<double>();
}

int integer(const json& v, const std::string& where) {
    if (!v.is_number_integer()) throw ValidationError(where + ": expected an integer");
    return v.get<int>();
}

double positive(const json& v, const std::string& where) {
    double x = number(v, where);
    if (!(x > 0) || !std::isfinite(x)) throw ValidationError(where + ": must be positive");
    return x;
}

cplx complex_of(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2) throw ValidationError(where + ": expected [re, im]");
    return {number(v[0], where), number(v[1], where)};
}

std::vector<double> numbers(const json& v, const std::string& where) {
    if (!v.is_array()) throw ValidationError(where + ": expected an array");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(number(x, where));
    return out;
}

MinkowskiVector vector3(const json& v, const std::string& where) {
    auto x = numbers(v, where);
    if (x.size() != 3) throw ValidationError(where + ": expected three numbers");
    return {x[0], x[1], x[2]};
}

json to_json(cplx z) { return json::array({z.real(), z.imag()}); }
json to_json(const MinkowskiVector& v) { return json::array({v.x1, v.x2, v.x3}); }
json to_json(const Eigen::VectorXi& v) {
    json a = json::array();
    for (int k = 0; k < v.size(); ++k) a.push_back(v[k]);
    return a;
}
json to_json(const Eigen::VectorXcd& v) {
    json a = json::array();
    for (int k = 0; k < v.size(); ++k) a.push_back(to_json(v[k]));
    return a;
}
json to_json(const Eigen::MatrixXcd& m) {
    json a = json::array();
    for (int r = 0; r < m.rows(); ++r) a.push_back(to_json(Eigen::VectorXcd(m.row(r).transpose())));
    return a;
}
json to_json(const jacobian::Divisor& d) {
    json a = json::array();
    for (const auto& [p, mult] : d.points)
        a.push_back({{"z", to_json(p.z)}, {"sheet", curve::sign(p.sheet) > 0 ? "+" : "-"}, {"multiplicity", mult}});
    return a;
}

// ---------- output ----------

fs::path prepare(const Config& cfg) {
    fs::path out(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw ValidationError("cannot create output directory " + out.string() + ": " + ec.message());
    return out;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ValidationError("cannot write " + p.string());
    os << text;
}

json envelope(const Config& cfg, const std::string& kind) {
    return {{"schema", "maxperiodic/" + kind}, {"version", kSchemaVersion}, {"config_hash", cfg.hash}};
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

std::string num(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

class Csv {
public:
    Csv(std::string hash, std::vector<std::string> header) : hash_(std::move(hash)) {
        os_ << "config_hash";
        for (auto& h : header) os_ << ',' << csv_field(h);
        os_ << "\r\n";
    }
    Csv& row() {
        os_ << hash_;
        return *this;
    }
    Csv& operator<<(const std::string& s) {
        os_ << ',' << csv_field(s);
        return *this;
    }
    Csv& operator<<(const char* s) { return *this << std::string(s); }
    Csv& operator<<(double x) {
        os_ << ',' << num(x);
        return *this;
    }
    Csv& operator<<(int x) {
        os_ << ',' << x;
        return *this;
    }
    void end() { os_ << "\r\n"; }
    std::string str() const { return os_.str(); }

private:
    std::string hash_;
    std::ostringstream os_;
};

struct Checks {
    json list = json::array();
    bool all = true;
    void add(const std::string& name, double value, const std::string& relation, double limit, bool pass) {
        list.push_back({{"name", name}, {"value", value}, {"relation", relation}, {"limit", limit}, {"pass", pass}});
        all = all && pass;
    }
    void at_most(const std::string& name, double value, double limit) {
        add(name, value, "<=", limit, value <= limit);
    }
    void flag(const std::string& name, bool pass) { add(name, pass ? 1 : 0, "==", 1, pass); }
};

void require_branch(const Config& cfg) {
    if (cfg.branch.empty()) throw ValidationError("branch_points: required for this command");
    std::string why = curve::validate_branch(cfg.branch);
    if (!why.empty()) throw ValidationError("branch_points: " + why);
    if (cfg.genus && *cfg.genus != cfg.n())
        throw ValidationError("genus: " + std::to_string(*cfg.genus) + " does not match " +
                              std::to_string(cfg.branch.size()) + " branch points");
}

void require_end(const curve::RealHyperellipticCurve& c, cplx e) {
    if (c.distance_to_slits(e) < 1e-6) throw ValidationError("end_point: must lie off the slits");
    if (std::abs(e - curve::basepoint()) < 1e-6) throw ValidationError("end_point: must differ from the basepoint");
}

quad::Options quad_opt(const Config& cfg) { return {cfg.tol.quadrature, 20, 40}; }

struct Engine {
    curve::RealHyperellipticCurve curve;
    homology::PeriodData pd;
    std::optional<jacobian::AbelMap> abel;
    jacobian::SpinorSystem sys;
};

Engine engine(const Config& cfg, bool spinors) {
    require_branch(cfg);
    Engine E;
    E.curve = curve::RealHyperellipticCurve(cfg.branch);
    require_end(E.curve, cfg.e);
    E.pd = homology::dual_basis_and_periods(E.curve, homology::build_basis(E.curve), quad_opt(cfg));
    if (spinors) {
        E.abel.emplace(E.curve, E.pd, quad_opt(cfg));
        E.sys = jacobian::spinor_sections(*E.abel, cfg.e);
    }
    return E;
}

double pde_slope(const std::vector<surface::PdeReport>& r) {
    // least-squares slope of log sup against log h
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = static_cast<int>(r.size());
    for (const auto& p : r) {
        double x = std::log(p.h), y = std::log(p.sup);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

std::string write_obj_mesh(const Config& cfg, const surface::MaximalGraphMesh& m, int replicas) {
    std::ostringstream os;
    os << std::setprecision(12);
    os << "# maxperiodic surface\n# config_hash " << cfg.hash << "\n# replicas " << replicas << "\n";
    std::vector<int> id(static_cast<size_t>(m.nx) * m.ny * replicas, 0);
    int next = 0;
    for (int r = 0; r < replicas; ++r)
        for (int j = 0; j < m.ny; ++j)
            for (int i = 0; i < m.nx; ++i) {
                const surface::Vertex& v = m.at(i, j);
                if (!v.valid) continue;
                double x1 = i * m.h + surface::wrap_diff(v.X.x1 - i * m.h) + r;
                os << "v " << x1 << ' ' << v.X.x2 << ' ' << v.X.x3 << "\n";
                id[(static_cast<size_t>(r) * m.ny + j) * m.nx + i] = ++next;
            }
    auto index = [&](int r, int i, int j) -> int {
        r += i / m.nx;
        i %= m.nx;
        if (r >= replicas) return 0;
        return id[(static_cast<size_t>(r) * m.ny + j) * m.nx + i];
    };
    for (int r = 0; r < replicas; ++r)
        for (int j = 0; j + 1 < m.ny; ++j)
            for (int i = 0; i < m.nx; ++i) {
                int a = index(r, i, j), b = index(r, i + 1, j), c = index(r, i + 1, j + 1), d = index(r, i, j + 1);
                if (a && b && c) os << "f " << a << ' ' << b << ' ' << c << "\n";
                if (a && c && d) os << "f " << a << ' ' << c << ' ' << d << "\n";
            }
    return os.str();
}

json mesh_json(const surface::MaximalGraphMesh& m, const surface::PdeReport& p) {
    return {{"h", m.h},
            {"nx", m.nx},
            {"ny", m.ny},
            {"x2_low", m.x2lo},
            {"vertices", m.vertices.size()},
            {"faces", m.faces.size()},
            {"holes", m.holes},
            {"singular_vertices", m.singular},
            {"scatter_nodes", m.scatter_nodes},
            {"max_normal_defect", m.max_normal_defect},
            {"recheck_defect", m.recheck_defect},
            {"graph_defect", m.graph_defect},
            {"wrap_jump", m.wrap_jump},
            {"pde_sup", p.sup},
            {"pde_nodes", p.nodes}};
}

json end_json(const surface::End& E) {
    json rings = json::array();
    for (const auto& r : E.rings) rings.push_back({{"radius", r.radius}, {"residual", r.residual}, {"mean", r.mean}});
    return {{"name", E.name}, {"normal", to_json(E.normal)}, {"height", E.height}, {"monotone", E.monotone},
            {"rings", rings}};
}

}  // namespace

// ---------- config ----------

std::string config_hash(const json& j) {
    std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

Config parse_config(const json& j) {
    Config cfg;
    check_keys(j, "config",
               {"version", "genus", "branch_points", "end_point", "divisor", "q0", "eps0", "mesh", "tolerances",
                "output", "normalize_e1_height", "catenoid", "moduli_scan"});
    if (!j.contains("version")) throw ValidationError("config: missing 'version'");
    cfg.version = integer(j["version"], "version");
    if (cfg.version != kSchemaVersion)
        throw ValidationError("version: unsupported schema version " + std::to_string(cfg.version));
    if (j.contains("genus")) {
        cfg.genus = integer(j["genus"], "genus");
        if (*cfg.genus < 1) throw ValidationError("genus: must be at least 1");
    }
    if (j.contains("branch_points")) cfg.branch = numbers(j["branch_points"], "branch_points");
    if (j.contains("end_point")) cfg.e = complex_of(j["end_point"], "end_point");
    if (j.contains("divisor")) {
        const json& d = j["divisor"];
        check_keys(d, "divisor", {"source", "section", "points"});
        std::string src = d.value("source", "solve");
        if (src == "solve") {
            cfg.divisor.solve = true;
            if (d.contains("points")) throw ValidationError("divisor: 'points' requires source 'explicit'");
            if (d.contains("section")) cfg.divisor.section = integer(d["section"], "divisor.section");
        } else if (src == "explicit") {
            cfg.divisor.solve = false;
            if (d.contains("section")) throw ValidationError("divisor: 'section' requires source 'solve'");
            if (!d.contains("points") || !d["points"].is_array())
                throw ValidationError("divisor.points: required for an explicit divisor");
            for (const auto& p : d["points"]) cfg.divisor.points.push_back(complex_of(p, "divisor.points"));
        } else {
            throw ValidationError("divisor.source: expected 'solve' or 'explicit'");
        }
        if (cfg.divisor.section < 0) throw ValidationError("divisor.section: must be non-negative");
    }
    if (j.contains("q0")) cfg.q0 = vector3(j["q0"], "q0");
    if (j.contains("eps0")) {
        cfg.eps0 = integer(j["eps0"], "eps0");
        if (cfg.eps0 != 1 && cfg.eps0 != -1) throw ValidationError("eps0: must be 1 or -1");
    }
    if (j.contains("mesh")) {
        const json& m = j["mesh"];
        check_keys(m, "mesh", {"h", "refinements", "x2_margin", "cone_exclusion", "ring_angles", "threads"});
        if (m.contains("h")) cfg.mesh.h = positive(m["h"], "mesh.h");
        if (m.contains("refinements")) cfg.mesh.refinements = integer(m["refinements"], "mesh.refinements");
        if (m.contains("x2_margin")) cfg.mesh.x2_margin = positive(m["x2_margin"], "mesh.x2_margin");
        if (m.contains("cone_exclusion")) cfg.mesh.cone_exclusion = positive(m["cone_exclusion"], "mesh.cone_exclusion");
        if (m.contains("ring_angles")) cfg.mesh.ring_angles = integer(m["ring_angles"], "mesh.ring_angles");
        if (m.contains("threads")) cfg.mesh.threads = integer(m["threads"], "mesh.threads");
        double nx = 1 / cfg.mesh.h;
        if (std::abs(nx - std::round(nx)) > 1e-9 || nx < 4)
            throw ValidationError("mesh.h: must be 1/N for an integer N >= 4");
        if (cfg.mesh.refinements < 1 || cfg.mesh.refinements > 6)
            throw ValidationError("mesh.refinements: must be in 1..6");
        if (cfg.mesh.ring_angles < 8) throw ValidationError("mesh.ring_angles: must be at least 8");
        if (cfg.mesh.threads < 0) throw ValidationError("mesh.threads: must be non-negative");
    }
    if (j.contains("tolerances")) {
        const json& t = j["tolerances"];
        check_keys(t, "tolerances",
                   {"quadrature", "abel", "tracking", "closure", "certificate", "conformality", "certificate_samples"});
        if (t.contains("quadrature")) cfg.tol.quadrature = positive(t["quadrature"], "tolerances.quadrature");
        if (t.contains("abel")) cfg.tol.abel = positive(t["abel"], "tolerances.abel");
        if (t.contains("tracking")) cfg.tol.tracking = positive(t["tracking"], "tolerances.tracking");
        if (t.contains("closure")) cfg.tol.closure = positive(t["closure"], "tolerances.closure");
        if (t.contains("certificate")) cfg.tol.certificate = positive(t["certificate"], "tolerances.certificate");
        if (t.contains("conformality")) cfg.tol.conformality = positive(t["conformality"], "tolerances.conformality");
        if (t.contains("certificate_samples")) {
            cfg.tol.certificate_samples = integer(t["certificate_samples"], "tolerances.certificate_samples");
            if (cfg.tol.certificate_samples < 1) throw ValidationError("tolerances.certificate_samples: must be positive");
        }
    }
    if (j.contains("output")) {
        const json& o = j["output"];
        check_keys(o, "output", {"directory", "replicas"});
        if (o.contains("directory")) {
            if (!o["directory"].is_string()) throw ValidationError("output.directory: expected a string");
            cfg.out_dir = o["directory"].get<std::string>();
        }
        if (o.contains("replicas")) cfg.replicas = integer(o["replicas"], "output.replicas");
        if (cfg.replicas < 1 || cfg.replicas > 64) throw ValidationError("output.replicas: must be in 1..64");
    }
    if (j.contains("normalize_e1_height")) {
        if (!j["normalize_e1_height"].is_boolean()) throw ValidationError("normalize_e1_height: expected a boolean");
        cfg.normalize_e1_height = j["normalize_e1_height"].get<bool>();
    }
    if (j.contains("catenoid")) {
        const json& c = j["catenoid"];
        check_keys(c, "catenoid", {"c", "h", "half_width", "exclusion", "obj_stride"});
        if (c.contains("c")) cfg.catenoid.c = positive(c["c"], "catenoid.c");
        if (c.contains("h")) cfg.catenoid.h = positive(c["h"], "catenoid.h");
        if (c.contains("half_width")) cfg.catenoid.half_width = positive(c["half_width"], "catenoid.half_width");
        if (c.contains("exclusion")) cfg.catenoid.exclusion = positive(c["exclusion"], "catenoid.exclusion");
        if (c.contains("obj_stride")) cfg.catenoid.obj_stride = integer(c["obj_stride"], "catenoid.obj_stride");
        if (cfg.catenoid.obj_stride < 1) throw ValidationError("catenoid.obj_stride: must be positive");
        if (cfg.catenoid.half_width / cfg.catenoid.h > 5000) throw ValidationError("catenoid: grid too large");
        if (cfg.catenoid.exclusion >= cfg.catenoid.half_width)
            throw ValidationError("catenoid.exclusion: must be below half_width");
    }
    if (j.contains("moduli_scan")) {
        const json& s = j["moduli_scan"];
        check_keys(s, "moduli_scan", {"points", "step", "rank_tol"});
        if (s.contains("step")) cfg.scan.step = positive(s["step"], "moduli_scan.step");
        if (s.contains("rank_tol")) cfg.scan.rank_tol = positive(s["rank_tol"], "moduli_scan.rank_tol");
        if (s.contains("points")) {
            if (!s["points"].is_array()) throw ValidationError("moduli_scan.points: expected an array");
            for (const auto& p : s["points"]) {
                check_keys(p, "moduli_scan.points[]", {"branch_points", "end_point", "section"});
                ScanPoint sp;
                sp.branch = p.contains("branch_points") ? numbers(p["branch_points"], "moduli_scan.points[].branch_points")
                                                        : cfg.branch;
                sp.e = p.contains("end_point") ? complex_of(p["end_point"], "moduli_scan.points[].end_point") : cfg.e;
                sp.section = p.contains("section") ? integer(p["section"], "moduli_scan.points[].section")
                                                   : cfg.divisor.section;
                cfg.scan.points.push_back(sp);
            }
        }
    }
    cfg.raw = j;
    cfg.hash = config_hash(j);
    return cfg;
}

Config load_config(const std::string& path, std::optional<int> replicas, bool normalize_e1_height,
                   std::optional<std::string> out_dir) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot open config " + path);
    json j;
    try {
        j = json::parse(is);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config: expected an object");
    if (replicas) j["output"]["replicas"] = *replicas;
    if (normalize_e1_height) j["normalize_e1_height"] = true;
    if (out_dir) j["output"]["directory"] = *out_dir;
    try {
        return parse_config(j);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
}

// ---------- commands ----------

Outcome cmd_validate(const Config& cfg) {
    Outcome o;
    o.report = envelope(cfg, "validate");
    std::string why;
    try {
        require_branch(cfg);
        curve::RealHyperellipticCurve c(cfg.branch);
        require_end(c, cfg.e);
        int n = c.genus();
        int sections = 1 << (2 * n);
        if (cfg.divisor.solve) {
            if (cfg.divisor.section >= sections)
                throw ValidationError("divisor.section: must be below " + std::to_string(sections));
        } else {
            if (static_cast<int>(cfg.divisor.points.size()) != n)
                throw ValidationError("divisor.points: need exactly " + std::to_string(n) + " points");
            std::vector<curve::CurvePoint> pts;
            for (cplx z : cfg.divisor.points) pts.push_back(curve::CurvePoint::at(z));
            std::string bad = jacobian::check_in_domain(c, jacobian::Divisor::of(pts));
            if (!bad.empty()) throw ValidationError("divisor.points: " + bad);
        }
        o.report["genus"] = n;
        o.report["sections"] = sections;
    } catch (const ValidationError& e) {
        why = e.what();
    }
    o.report["valid"] = why.empty();
    o.report["violation"] = why;
    write_json(prepare(cfg) / "validate.json", o.report);
    if (!why.empty()) throw ValidationError(why);
    return o;
}

Outcome cmd_periods(const Config& cfg) {
    Engine E = engine(cfg, false);
    const auto& pd = E.pd;
    int n = pd.n;
    double delta = (pd.eta_a - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
    double re = pd.Pi.real().cwiseAbs().maxCoeff();
    double sym = (pd.Pi - pd.Pi.transpose()).cwiseAbs().maxCoeff();
    Checks ch;
    ch.at_most("a_period_delta", delta, 1e-10);
    ch.at_most("pi_real_part", re, 1e-10);
    ch.at_most("pi_symmetry", sym, 1e-9);
    Outcome o;
    o.report = envelope(cfg, "periods");
    o.report["genus"] = n;
    o.report["branch_points"] = cfg.branch;
    o.report["Pi"] = to_json(pd.Pi);
    o.report["eta_coefficients"] = to_json(pd.C);
    o.report["quadrature_error"] = pd.quad_error;
    o.report["checks"] = ch.list;
    fs::path out = prepare(cfg);
    std::ostringstream csv;
    homology::write_periods_csv(csv, pd, cfg.hash);
    write_text(out / "periods.csv", csv.str());
    write_json(out / "periods.json", o.report);
    o.code = ch.all ? 0 : static_cast<int>(ExitCode::diagnostics);
    return o;
}

Outcome cmd_spinors(const Config& cfg) {
    Engine E = engine(cfg, true);
    Checks ch;
    Outcome o;
    o.report = envelope(cfg, "spinors");
    o.report["genus"] = E.curve.genus();
    o.report["end_point"] = to_json(cfg.e);
    o.report["canonical_agreement"] = E.sys.T.agreement;
    json secs = json::array();
    double worst = 0;
    jacobian::SolveOptions so;
    so.tol = cfg.tol.abel;
    for (const auto& s : E.sys.sections) {
        json js = {{"index", s.index},
                   {"bits", to_json(s.bits)},
                   {"E", to_json(s.E.value)},
                   {"mirror_defect", s.mirror_defect},
                   {"doubling_defect", s.doubling_defect}};
        worst = std::max(worst, s.mirror_defect);
        auto sol = jacobian::solve_divisor(*E.abel, E.sys, s.index, cfg.e, so);
        js["admissible"] = sol.admissible;
        js["divisor"] = to_json(sol.divisor);
        js["residual"] = sol.residual;
        js["condition"] = sol.condition;
        js["note"] = sol.note;
        if (sol.admissible) {
            auto mem = jacobian::spinor_membership(*E.abel, E.sys, sol.divisor, cfg.e);
            js["membership_residual"] = mem.residual;
            js["membership_section"] = mem.best_section;
            ch.at_most("membership_section_" + std::to_string(s.index), mem.residual, cfg.tol.abel);
        }
        secs.push_back(js);
    }
    ch.add("section_count", static_cast<double>(E.sys.sections.size()), "==", 1 << (2 * E.curve.genus()),
           static_cast<int>(E.sys.sections.size()) == 1 << (2 * E.curve.genus()));
    ch.at_most("mirror_fixed", worst, cfg.tol.abel);
    o.report["sections"] = secs;
    o.report["checks"] = ch.list;
    write_json(prepare(cfg) / "spinors.json", o.report);
    o.code = ch.all ? 0 : static_cast<int>(ExitCode::diagnostics);
    return o;
}

Outcome cmd_build(const Config& cfg) {
    auto t0 = clk::now();
    Engine E = engine(cfg, true);
    int n = E.curve.genus();
    Outcome o;
    o.report = envelope(cfg, "build");
    json timing;

    // divisor
    jacobian::Divisor D;
    json div;
    if (cfg.divisor.solve) {
        int count = static_cast<int>(E.sys.sections.size());
        if (cfg.divisor.section >= count)
            throw ValidationError("divisor.section: must be below " + std::to_string(count));
        jacobian::SolveOptions so;
        so.tol = cfg.tol.abel;
        auto sol = jacobian::solve_divisor(*E.abel, E.sys, cfg.divisor.section, cfg.e, so);
        if (!sol.admissible)
            throw ObstructionError("section " + std::to_string(cfg.divisor.section) + " has no admissible divisor: " +
                                       sol.note,
                                   sol.residual);
        D = sol.divisor;
        div = {{"source", "solve"}, {"section", cfg.divisor.section}, {"residual", sol.residual},
               {"condition", sol.condition}};
    } else {
        if (static_cast<int>(cfg.divisor.points.size()) != n)
            throw ValidationError("divisor.points: need exactly " + std::to_string(n) + " points");
        std::vector<curve::CurvePoint> pts;
        for (cplx z : cfg.divisor.points) pts.push_back(curve::CurvePoint::at(z));
        D = jacobian::Divisor::of(pts);
        std::string bad = jacobian::check_in_domain(E.curve, D);
        if (!bad.empty()) throw ValidationError("divisor.points: " + bad);
        auto mem = jacobian::spinor_membership(*E.abel, E.sys, D, cfg.e);
        if (mem.residual > cfg.tol.abel)
            throw ObstructionError("divisor is not spinorial (nearest section " + std::to_string(mem.best_section) + ")",
                                   mem.residual);
        div = {{"source", "explicit"}, {"residual", mem.residual}, {"section", mem.best_section}};
    }
    div["points"] = to_json(D);
    o.report["divisor"] = div;
    timing["divisor"] = seconds_since(t0);

    // Weierstrass data
    weierstrass::WeierstrassData W = weierstrass::build(E.curve, E.pd, D, cfg.e, cfg.eps0, cfg.q0,
                                                        {cfg.tol.abel, cfg.tol.tracking, cfg.tol.certificate_samples});
    surface::Immersion im(W, cfg.tol.tracking);
    surface::EndData ends = surface::end_data(im);
    double shift = 0;
    if (cfg.normalize_e1_height) {
        shift = -ends.e1.height;
        W.q0.x3 += shift;
        ends = surface::end_data(im);
    }
    timing["weierstrass"] = seconds_since(t0);
    const auto& ct = W.cert;
    o.report["weierstrass"] = {
        {"branch_points", cfg.branch},
        {"end_point", to_json(cfg.e)},
        {"g_m", to_json(W.g0.m)},
        {"g_l", to_json(W.g0.l)},
        {"f_m", to_json(W.phi3.f.m)},
        {"f_l", to_json(W.phi3.f.l)},
        {"kappa", to_json(W.phi3.kappa)},
        {"theta", to_json(W.theta)},
        {"r", W.r},
        {"eps0", W.eps0},
        {"q0", to_json(W.q0)},
        {"chi", {{"V0", to_json(W.chi.V0)}, {"flux_sign", W.chi.flux_sign}}},
        {"certificates",
         {{"abel_g", ct.abel_g},
          {"abel_f", ct.abel_f},
          {"a_period_g", ct.a_period_g},
          {"a_period_f", ct.a_period_f},
          {"g_modulus_on_slits", ct.g_modulus_on_slits},
          {"g_mirror", ct.g_mirror},
          {"phi3_antisymmetry", ct.phi3_antisymmetry},
          {"conformality", ct.conformality},
          {"degree_winding", ct.degree_winding},
          {"fitted_r", ct.fitted_r}}}};

    // marks, periods, cones
    surface::Mark mark = surface::extract_mark(im);
    surface::PeriodReport pr = surface::period_closure(im, mark);
    auto cones = surface::cone_asymptotics(im, mark);
    timing["marks_periods_cones"] = seconds_since(t0);

    // meshes
    std::vector<surface::MaximalGraphMesh> meshes;
    std::vector<surface::PdeReport> pdes;
    json mj = json::array();
    for (int k = 0; k < cfg.mesh.refinements; ++k) {
        surface::MeshSpec ms;
        ms.h = cfg.mesh.h / (1 << k);
        ms.x2_margin = cfg.mesh.x2_margin;
        ms.cone_exclusion = cfg.mesh.cone_exclusion;
        ms.ring_angles = cfg.mesh.ring_angles;
        ms.track_tol = cfg.tol.tracking;
        ms.threads = cfg.mesh.threads;
        meshes.push_back(surface::integrate_immersion(im, mark, ms));
        pdes.push_back(surface::pde_residual(meshes.back(), mark, cfg.mesh.cone_exclusion));
        mj.push_back(mesh_json(meshes.back(), pdes.back()));
    }
    const surface::MaximalGraphMesh& fine = meshes.back();
    surface::SpacelikeReport sp = surface::spacelike_check(fine, mark, cfg.mesh.cone_exclusion);
    timing["meshes"] = seconds_since(t0);

    // checks
    Checks ch;
    ch.at_most("abel_g", ct.abel_g, cfg.tol.abel);
    ch.at_most("abel_f", ct.abel_f, cfg.tol.abel);
    ch.at_most("g_modulus_on_slits", ct.g_modulus_on_slits, cfg.tol.certificate);
    ch.add("degree_winding", ct.degree_winding, "==", n + 1, ct.degree_winding == n + 1);
    ch.at_most("phi3_antisymmetry", ct.phi3_antisymmetry, cfg.tol.certificate);
    ch.at_most("conformality", ct.conformality, cfg.tol.conformality);
    double spread = 0;
    for (double s : mark.spread) spread = std::max(spread, s);
    ch.at_most("mark_spread", spread, cfg.tol.closure);
    ch.at_most("period_closure", pr.closure, cfg.tol.closure);
    ch.at_most("e_translation", std::abs(std::abs(pr.e_translation) - 1), cfg.tol.closure);
    for (const auto& cy : pr.cycles)
        if (cy.name != "e") ch.flag("flux_timelike_" + cy.name, cy.causal == domain::Causal::timelike);
    double bid = 0;
    for (double b : pr.b_identity) bid = std::max(bid, b);
    ch.at_most("b_identity", bid, cfg.tol.closure);
    ch.flag("e1_converges", ends.e1.monotone);
    ch.flag("e2_converges", ends.e2.monotone);
    ch.add("c_in_unit_interval", ends.c, "in", 1, std::abs(ends.c) < 1);
    for (const auto& cr : cones) {
        std::string tag = "q" + std::to_string(cr.j);
        ch.at_most("cone_slope_" + tag, std::abs(cr.rings.back().slope - 1), 1e-2);
        ch.flag("cone_slope_increasing_" + tag, cr.slope_increasing);
        ch.flag("cone_gradient_increasing_" + tag, cr.grad_increasing);
    }
    for (size_t k = 0; k < meshes.size(); ++k) {
        const auto& m = meshes[k];
        std::string tag = "mesh" + std::to_string(k);
        ch.add("holes_" + tag, m.holes, "==", 0, m.holes == 0);
        ch.at_most("normal_defect_" + tag, m.max_normal_defect, cfg.tol.certificate);
        ch.at_most("recheck_" + tag, m.recheck_defect, cfg.tol.closure);
        ch.at_most("graph_defect_" + tag, m.graph_defect, cfg.tol.closure);
        ch.at_most("wrap_jump_" + tag, m.wrap_jump, 0.5);
    }
    double slope = pdes.size() >= 2 ? pde_slope(pdes) : std::nan("");
    if (pdes.size() >= 2) ch.add("pde_slope", slope, "2+-0.3", 0.3, std::abs(slope - 2) <= 0.3);
    ch.add("spacelike", sp.max_grad, "<", 1, sp.max_grad < 1);

    // moduli coordinates
    json s2 = json::array();
    for (const auto& q : mark.q) {
        s2.push_back(q.x1);
        s2.push_back(q.x2);
        s2.push_back(q.x3);
    }
    s2.push_back(ends.c);
    ch.add("s2_length", static_cast<double>(s2.size()), "==", 3 * n + 4, static_cast<int>(s2.size()) == 3 * n + 4);

    json marks = json::array();
    for (size_t j = 0; j < mark.q.size(); ++j) marks.push_back({{"q", to_json(mark.q[j])}, {"spread", mark.spread[j]}});
    json cyc = json::array();
    for (const auto& cy : pr.cycles)
        cyc.push_back({{"name", cy.name}, {"re", to_json(cy.re)}, {"flux", to_json(cy.flux)},
                       {"causal", domain::causal_name(cy.causal)}, {"closure", cy.closure}});
    json cj = json::array();
    for (const auto& cr : cones) {
        json rings = json::array();
        for (const auto& r : cr.rings)
            rings.push_back({{"r", r.r}, {"slope", r.slope}, {"spread", r.spread}, {"grad", r.grad}});
        cj.push_back({{"singularity", cr.j}, {"rings", rings}, {"slope_increasing", cr.slope_increasing},
                      {"grad_increasing", cr.grad_increasing}});
    }
    o.report["genus"] = n;
    o.report["mark"] = marks;
    o.report["periods"] = {{"cycles", cyc}, {"closure", pr.closure}, {"e_translation", pr.e_translation},
                           {"b_identity", pr.b_identity}};
    o.report["ends"] = {{"E1", end_json(ends.e1)}, {"E2", end_json(ends.e2)}, {"c", ends.c}};
    o.report["normalization"] = {{"e1_height", cfg.normalize_e1_height}, {"x3_shift", shift}};
    o.report["cones"] = cj;
    o.report["meshes"] = mj;
    o.report["pde_slope"] = slope;
    o.report["spacelike"] = {{"max_grad", sp.max_grad}, {"margin", sp.margin}, {"fd_agreement", sp.fd_agreement},
                             {"nodes", sp.nodes}};
    o.report["s2"] = s2;
    o.report["checks"] = ch.list;
    o.report["passed"] = ch.all;

    // artifacts
    fs::path out = prepare(cfg);
    write_text(out / "surface.obj", write_obj_mesh(cfg, fine, cfg.replicas));
    Csv cones_csv(cfg.hash, {"singularity", "r", "slope", "spread", "grad"});
    for (const auto& cr : cones)
        for (const auto& r : cr.rings) {
            cones_csv.row() << cr.j << r.r << r.slope << r.spread << r.grad;
            cones_csv.end();
        }
    write_text(out / "cones.csv", cones_csv.str());
    Csv flux_csv(cfg.hash, {"cycle", "re_x1", "re_x2", "re_x3", "flux_x1", "flux_x2", "flux_x3", "causal", "closure"});
    for (const auto& cy : pr.cycles) {
        flux_csv.row() << cy.name << cy.re.x1 << cy.re.x2 << cy.re.x3 << cy.flux.x1 << cy.flux.x2 << cy.flux.x3
                       << domain::causal_name(cy.causal) << cy.closure;
        flux_csv.end();
    }
    write_text(out / "flux.csv", flux_csv.str());
    Csv pde_csv(cfg.hash, {"h", "sup", "nodes"});
    for (const auto& p : pdes) {
        pde_csv.row() << p.h << p.sup << p.nodes;
        pde_csv.end();
    }
    write_text(out / "pde.csv", pde_csv.str());
    timing["total"] = seconds_since(t0);
    o.report["timing"] = timing;
    write_json(out / "report.json", o.report);
    o.code = ch.all ? 0 : static_cast<int>(ExitCode::diagnostics);
    return o;
}

Outcome cmd_catenoid(const Config& cfg) {
    auto t0 = clk::now();
    const auto& s = cfg.catenoid;
    surface::catenoid::Surface S = surface::catenoid::build(s);
    surface::catenoid::Report r = surface::catenoid::diagnose(s, S);
    r.seconds = seconds_since(t0);
    Checks ch;
    ch.at_most("profile", r.profile_defect, 1e-8);
    ch.at_most("pde_residual", r.pde_sup, 1e-6);
    ch.at_most("gradient", r.gradient_defect, 1e-8);
    ch.add("spacelike", r.max_grad, "<", 1, r.max_grad < 1);
    ch.at_most("cone_slope", std::abs(r.slope - 1), 1e-3);
    ch.at_most("rotational_symmetry", r.symmetry_defect, 1e-8);
    Outcome o;
    o.report = envelope(cfg, "catenoid");
    o.report["parameters"] = {{"c", s.c}, {"h", s.h}, {"half_width", s.half_width}, {"exclusion", s.exclusion}};
    o.report["profile_defect"] = r.profile_defect;
    o.report["pde_sup"] = r.pde_sup;
    o.report["pde_nodes"] = r.nodes;
    o.report["gradient_defect"] = r.gradient_defect;
    o.report["max_grad"] = r.max_grad;
    o.report["cone_slope"] = r.slope;
    o.report["symmetry_defect"] = r.symmetry_defect;
    o.report["planar_residual"] = r.planar_residual;
    o.report["checks"] = ch.list;
    o.report["passed"] = ch.all;
    o.report["timing"] = {{"total", r.seconds}};

    std::ostringstream obj;
    obj << std::setprecision(12) << "# maxperiodic catenoid\n# config_hash " << cfg.hash << "\n";
    int st = s.obj_stride, m = (S.n - 1) / st + 1;
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) {
            const auto& X = S.X[static_cast<size_t>(j * st) * S.n + i * st];
            obj << "v " << X.x1 << ' ' << X.x2 << ' ' << X.x3 << "\n";
        }
    for (int j = 0; j + 1 < m; ++j)
        for (int i = 0; i + 1 < m; ++i) {
            int a = j * m + i + 1, b = a + 1, c = a + m + 1, d = a + m;
            obj << "f " << a << ' ' << b << ' ' << c << "\nf " << a << ' ' << c << ' ' << d << "\n";
        }
    fs::path out = prepare(cfg);
    write_text(out / "catenoid.obj", obj.str());
    write_json(out / "catenoid.json", o.report);
    o.code = ch.all ? 0 : static_cast<int>(ExitCode::diagnostics);
    return o;
}

Outcome cmd_moduli_scan(const Config& cfg) {
    if (cfg.scan.points.empty()) throw ValidationError("moduli_scan.points: required and non-empty");
    for (const auto& p : cfg.scan.points) {
        std::string why = curve::validate_branch(p.branch);
        if (!why.empty()) throw ValidationError("moduli_scan.points[].branch_points: " + why);
    }
    struct Row {
        surface::S2Jacobian J;
        std::string status;
    };
    std::vector<Row> rows;
    for (const auto& p : cfg.scan.points) {
        surface::ModuliParams mp;
        mp.branch = p.branch;
        mp.e = p.e;
        mp.section = p.section;
        mp.eps0 = cfg.eps0;
        mp.q0 = cfg.q0;
        Row r;
        r.J = surface::s2_jacobian(mp, cfg.scan.step, cfg.scan.rank_tol);
        int n = static_cast<int>(p.branch.size()) / 2 - 1;
        if (!r.J.base.ok)
            r.status = "degenerate";
        else if (r.J.rank < 3 * n + 4)
            r.status = "rank-deficient";
        else
            r.status = "ok";
        rows.push_back(std::move(r));
    }
    // pairwise separation of the images (x1 compared on the circle)
    std::vector<double> sep(rows.size(), std::numeric_limits<double>::infinity());
    for (size_t a = 0; a < rows.size(); ++a)
        for (size_t b = a + 1; b < rows.size(); ++b) {
            const auto &u = rows[a].J.base, &v = rows[b].J.base;
            if (!u.ok || !v.ok || u.coords.size() != v.coords.size()) continue;
            double d = 0;
            for (size_t k = 0; k < u.coords.size(); ++k) {
                double x = u.coords[k] - v.coords[k];
                if (k % 3 == 0 && k + 1 < u.coords.size()) x = surface::wrap_diff(x);
                d = std::max(d, std::abs(x));
            }
            sep[a] = std::min(sep[a], d);
            sep[b] = std::min(sep[b], d);
        }
    size_t width = 0;
    for (const auto& r : rows) width = std::max(width, r.J.base.coords.size());
    std::vector<std::string> header{"point", "status", "rank", "sigma_min", "sigma_max", "separation"};
    for (size_t k = 0; k < width; ++k) header.push_back("s2_" + std::to_string(k + 1));
    header.push_back("note");
    Csv csv(cfg.hash, header);
    Checks ch;
    json pts = json::array();
    for (size_t a = 0; a < rows.size(); ++a) {
        const auto& J = rows[a].J;
        double smin = J.singular.size() ? J.singular[J.singular.size() - 1] : std::nan("");
        double smax = J.singular.size() ? J.singular[0] : std::nan("");
        csv.row() << static_cast<int>(a) << rows[a].status << J.rank << smin << smax << sep[a];
        for (size_t k = 0; k < width; ++k) {
            if (k < J.base.coords.size())
                csv << J.base.coords[k];
            else
                csv << "";
        }
        csv << J.base.note;
        csv.end();
        std::vector<double> sv(J.singular.data(), J.singular.data() + J.singular.size());
        pts.push_back({{"point", a}, {"status", rows[a].status}, {"rank", J.rank}, {"singular_values", sv},
                       {"s2", J.base.coords}, {"separation", std::isfinite(sep[a]) ? json(sep[a]) : json(nullptr)},
                       {"parameters", J.parameters}, {"note", J.base.note}});
        if (rows[a].status != "degenerate") {
            int n = static_cast<int>(cfg.scan.points[a].branch.size()) / 2 - 1;
            ch.add("rank_point_" + std::to_string(a), J.rank, "==", 3 * n + 4, J.rank == 3 * n + 4);
            if (std::isfinite(sep[a])) ch.add("separation_point_" + std::to_string(a), sep[a], ">", 0, sep[a] > 1e-9);
        }
    }
    Outcome o;
    o.report = envelope(cfg, "moduli-scan");
    o.report["points"] = pts;
    o.report["checks"] = ch.list;
    o.report["passed"] = ch.all;
    fs::path out = prepare(cfg);
    write_text(out / "moduli_scan.csv", csv.str());
    write_json(out / "moduli_scan.json", o.report);
    o.code = ch.all ? 0 : static_cast<int>(ExitCode::diagnostics);
    return o;
}

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"validate", "periods", "spinors", "build", "catenoid", "moduli-scan"};
    return names;
}

Outcome run_command(const std::string& name, const Config& cfg) {
    if (name == "validate") return cmd_validate(cfg);
    if (name == "periods") return cmd_periods(cfg);
    if (name == "spinors") return cmd_spinors(cfg);
    if (name == "build") return cmd_build(cfg);
    if (name == "catenoid") return cmd_catenoid(cfg);
    if (name == "moduli-scan") return cmd_moduli_scan(cfg);
    throw ValidationError("unknown command " + name);
}

int main_entry(const std::string& command, const std::string& config_path, std::optional<std::string> out_dir,
               std::optional<int> replicas, bool normalize_e1_height, std::ostream& log) {
    std::optional<Config> cfg;
    auto fail = [&](int code, const std::string& what, std::optional<double> residual) {
        log << "maxperiodic " << command << ": " << what << "\n";
        json err = {{"schema", "maxperiodic/error"}, {"version", kSchemaVersion}, {"command", command},
                    {"exit_code", code}, {"message", what}};
        if (cfg) err["config_hash"] = cfg->hash;
        if (residual) err["residual"] = *residual;
        fs::path dir = cfg ? fs::path(cfg->out_dir) : fs::path(out_dir.value_or("out"));
        std::error_code ec;
        fs::create_directories(dir, ec);
        std::ofstream(dir / "error.json") << err.dump(2) << "\n";
        return code;
    };
    try {
        cfg = load_config(config_path, replicas, normalize_e1_height, out_dir);
        Outcome o = run_command(command, *cfg);
        if (o.code != 0) {
            for (const auto& c : o.report.value("checks", json::array()))
                if (!c["pass"].get<bool>()) log << "check failed: " << c["name"].get<std::string>() << " = " << c["value"] << "\n";
            return fail(o.code, "diagnostic thresholds not met", std::nullopt);
        }
        log << "maxperiodic " << command << ": ok (config " << cfg->hash << ")\n";
        return 0;
    } catch (const ObstructionError& e) {
        return fail(static_cast<int>(e.code()), e.what(), e.residual);
    } catch (const Error& e) {
        return fail(static_cast<int>(e.code()), e.what(), std::nullopt);
    } catch (const std::exception& e) {
        return fail(1, e.what(), std::nullopt);
    }
}

}  // namespace maxperiodic::app
