// dglab: structure checks, Picard solves and level-set analysis from the command line.
//
// Exit codes: 0 success, 1 condition failure or divergence, 2 solver
// non-convergence, 64 usage error.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dglab/dglab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dglab;

namespace {

constexpr int kOk = 0;
constexpr int kConditionFailed = 1;
constexpr int kNotConverged = 2;
constexpr int kUsage = 64;

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

// JSON with every float at 17 significant digits; non-finite values become null.
void write_json(std::ostream& os, const json& j, int depth = 0) {
    const std::string pad(2 * (depth + 1), ' ');
    const std::string close(2 * depth, ' ');
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            bool first = true;
            for (const auto& [k, v] : j.items()) {
                if (!first) os << ",\n";
                first = false;
                os << pad << json(k).dump() << ": ";
                write_json(os, v, depth + 1);
            }
            os << "\n" << close << "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            bool scalars = std::none_of(j.begin(), j.end(), [](const json& e) { return e.is_structured(); });
            if (scalars) {
                os << "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) os << ", ";
                    write_json(os, j[i], depth + 1);
                }
                os << "]";
                return;
            }
            os << "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) os << ",\n";
                os << pad;
                write_json(os, j[i], depth + 1);
            }
            os << "\n" << close << "]";
            return;
        }
        case json::value_t::number_float: {
            const double v = j.get<double>();
            if (std::isfinite(v))
                os << num(v);
            else
                os << "null";
            return;
        }
        default:
            os << j.dump();
    }
}

std::string json_text(const json& j) {
    std::ostringstream os;
    write_json(os, j);
    os << "\n";
    return os.str();
}

/// Prints a report and, with --out, also stores it under that directory.
struct Output {
    std::string dir;

    void emit(const std::string& file, const std::string& text) const {
        std::cout << text;
        if (!dir.empty()) store(file, text);
    }
    void store(const std::string& file, const std::string& text) const {
        const fs::path p = path(file);
        std::ofstream os(p);
        if (!os) throw FormatError("cannot write " + p.string());
        os << text;
    }
    [[nodiscard]] fs::path path(const std::string& file) const {
        const fs::path d = dir.empty() ? fs::path(".") : fs::path(dir);
        fs::create_directories(d);
        return d / file;
    }
};

json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open " + path);
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
}

CoefficientTensor tensor_arg(const json& j) {
    if (j.is_string()) return load_tensor(j.get<std::string>());
    return tensor_from_json(j);
}

std::pair<std::int64_t, std::int64_t> parse_range(const std::string& s) {
    const auto dots = s.find("..");
    if (dots == std::string::npos) throw InvalidArgument("range must look like a..b");
    try {
        return {std::stoll(s.substr(0, dots)), std::stoll(s.substr(dots + 2))};
    } catch (const std::exception&) {
        throw InvalidArgument("range must look like a..b");
    }
}

json sides_json(const CaccioppoliSides& s, const CaccioppoliCheckSpec& spec) {
    return {{"L", spec.L},
            {"lhs", s.lhs},
            {"rhs", s.rhs},
            {"ratio", s.ratio},
            {"constant", s.constant},
            {"spec", {{"center", spec.center}, {"s", spec.s}, {"t", spec.t}, {"L", spec.L}}}};
}

std::string trace_csv(const ExcessTrace& tr) {
    std::ostringstream os;
    os << "# d=" << num(tr.d) << " R=" << num(tr.R) << " p=" << num(tr.p) << " p_star=" << num(tr.p_star)
       << " theta=" << num(tr.theta) << "\n";
    const auto fit = fit_decay(tr);
    if (fit.applicable) os << "# C_fit=" << num(fit.C_fit) << " argmax_h=" << fit.argmax_h << "\n";
    os << "h,k_h,rho_h,J_h\n";
    for (const auto& e : tr.entries) os << e.h << "," << num(e.k) << "," << num(e.rho) << "," << num(e.J) << "\n";
    return os.str();
}

json trace_json(const ExcessTrace& tr) {
    json rows = json::array();
    for (const auto& e : tr.entries) rows.push_back({{"h", e.h}, {"k_h", e.k}, {"rho_h", e.rho}, {"J_h", e.J}});
    const auto fit = fit_decay(tr);
    json j = {{"d", tr.d}, {"R", tr.R}, {"H", tr.H}, {"p", tr.p}, {"p_star", tr.p_star}, {"theta", tr.theta},
              {"center", tr.center}, {"non_increasing", tr.non_increasing()}, {"entries", rows}};
    j["fit"] = fit.applicable ? json{{"C_fit", fit.C_fit}, {"argmax_h", fit.argmax_h}, {"ok", fit.ok}} : json(nullptr);
    return j;
}

json level_json(const LevelSearch& s) {
    return {{"bounded", s.bounded}, {"d", s.bounded ? json(s.d) : json(nullptr)}, {"tried", s.tried}};
}

std::vector<double> center_or_mid(const std::vector<double>& given, const Mesh& m) {
    if (!given.empty()) {
        if (given.size() != static_cast<std::size_t>(m.n())) throw InvalidArgument("--center needs n coordinates");
        return given;
    }
    std::vector<double> c(m.n());
    for (int d = 0; d < m.n(); ++d) c[d] = 0.5 * (m.lower()[d] + m.upper()[d]);
    return c;
}

// ---------------------------------------------------------------------------
// check

struct CheckArgs {
    std::string tensor = "example4";
    std::string config;
    double y_extent = 10.0;
    int y_points = 101;
    int x_points = 3;
    std::vector<double> L_grid;
};

int run_check(const CheckArgs& a, const Output& out) {
    json cfg = a.config.empty() ? json::object() : read_json_file(a.config);
    const auto t = tensor_arg(cfg.value("tensor", json(a.tensor)));
    const json samples = cfg.value("samples", json::object());
    auto spec = SampleSpec::box(t.n(), t.N(), samples.value("y_extent", a.y_extent), samples.value("y_points", a.y_points),
                                samples.value("x_points", a.x_points));
    std::vector<double> grid = cfg.value("L_grid", a.L_grid);
    if (grid.empty()) grid = default_L_grid();
    const auto report = check_structure(t, spec, grid);
    json j = to_json(report);
    j["tensor"] = t.kind();
    j["L_grid"] = grid;
    out.emit("structure_report.json", json_text(j));
    if (!report.all_passed() && !report.witnesses.empty()) {
        const auto& w = report.witnesses.front();
        std::cerr << "staircase violation at y=(" << num(w.y[0]);
        for (std::size_t i = 1; i < w.y.size(); ++i) std::cerr << "," << num(w.y[i]);
        std::cerr << ") alpha=" << w.alpha + 1 << " beta=" << w.beta + 1 << " L=" << num(w.L) << "\n";
    }
    return report.all_passed() ? kOk : kConditionFailed;
}

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
    std::string config;
    std::string tensor;
    int cells = 0;
    std::string boundary;
    std::optional<double> amplitude;
    bool timing = false;
};

InitialGuess parse_guess(const std::string& s) {
    if (s == "harmonic") return InitialGuess::harmonic;
    if (s == "boundary_mean") return InitialGuess::boundary_mean;
    if (s == "zero_interior") return InitialGuess::zero_interior;
    throw InvalidArgument("unknown initial_guess '" + s + "'");
}

struct SolveSetup {
    CoefficientTensor tensor;
    MeshPtr mesh;
    DirichletData g;
    double amplitude;
    PicardConfig picard;
};

SolveSetup solve_setup(const SolveArgs& a) {
    json cfg = a.config.empty() ? json::object() : read_json_file(a.config);
    try {
        auto t = tensor_arg(a.tensor.empty() ? cfg.value("tensor", json("example4")) : json(a.tensor));
        const json mj = cfg.value("mesh", json::object());
        const int n = mj.value("n", t.n());
        const json box = mj.value("box", json::object());
        auto lower = box.value("lower", std::vector<double>(n, 0.0));
        auto upper = box.value("upper", std::vector<double>(n, 1.0));
        const int cells = a.cells > 0 ? a.cells : mj.value("cells_per_axis", 8);
        std::string bname = "bounded_sine";
        double amp = 1.0;
        if (cfg.contains("boundary")) {
            const auto& b = cfg["boundary"];
            if (b.is_string()) {
                bname = b.get<std::string>();
            } else {
                bname = b.value("name", bname);
                amp = b.value("amplitude", amp);
            }
        }
        if (!a.boundary.empty()) bname = a.boundary;
        if (a.amplitude) amp = *a.amplitude;
        PicardConfig pc;
        const json pj = cfg.value("picard", json::object());
        pc.max_outer_iters = pj.value("max_outer_iters", pc.max_outer_iters);
        pc.outer_tol = pj.value("outer_tol", pc.outer_tol);
        pc.linear_tol = pj.value("linear_tol", pc.linear_tol);
        pc.linear_max_iters = pj.value("linear_max_iters", pc.linear_max_iters);
        pc.initial_guess = parse_guess(pj.value("initial_guess", std::string("harmonic")));
        pc.validate();
        auto mesh = build_box_mesh(n, lower, upper, cells);
        auto g = boundary_preset(bname, n, t.N(), amp);
        return {std::move(t), std::move(mesh), std::move(g), amp, pc};
    } catch (const json::exception& e) {
        throw FormatError(std::string("solve config: ") + e.what());
    }
}

json solve_report(const SolveSetup& s, const SolveResult& r, const std::string& csv, std::optional<double> seconds) {
    json lin = json::array();
    for (const auto& d : r.linear)
        lin.push_back({{"method", d.method}, {"iterations", d.iterations}, {"relative_residual", d.relative_residual},
                       {"krylov_failed", d.krylov_failed}});
    json j = {{"tensor", s.tensor.kind()},
              {"mesh", mesh_sidecar(*s.mesh, s.g.N)},
              {"boundary", {{"name", s.g.name}, {"amplitude", s.amplitude}}},
              {"picard",
               {{"max_outer_iters", s.picard.max_outer_iters},
                {"outer_tol", s.picard.outer_tol},
                {"linear_tol", s.picard.linear_tol},
                {"linear_max_iters", s.picard.linear_max_iters}}},
              {"converged", r.converged},
              {"outer_iters", r.outer_iters},
              {"final_update", r.final_update},
              {"update_history", r.update_history},
              {"linear", lin},
              {"weak_residual", weak_residual(s.tensor, r.field)},
              {"solution", csv}};
    std::vector<double> sup(r.field.N());
    for (int a = 0; a < r.field.N(); ++a) sup[a] = r.field.max_component(a);
    j["max_component"] = sup;
    if (seconds) j["seconds"] = *seconds;
    return j;
}

int run_solve(const SolveArgs& a, const Output& out) {
    const auto setup = solve_setup(a);
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = picard_solve(setup.tensor, setup.mesh, setup.g, setup.picard);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const fs::path csv = out.path("solution.csv");
    save_field(r.field, csv);
    out.emit("run_report.json", json_text(solve_report(setup, r, csv.filename().string(),
                                                       a.timing ? std::optional<double>(secs) : std::nullopt)));
    return r.converged ? kOk : kNotConverged;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
    std::string field;
    bool zero_field = false;
    int cells = 8;
    std::string tensor = "example4";
    std::vector<double> center;
    double s = 0.15;
    double t = 0.3;
    std::vector<double> L{1.0, 1.5, 2.0};
    double d = 4.0;
    std::optional<double> R;
    int H = 12;
    double p = 2.0;
    std::optional<double> p_star;
    std::string scan = "2..20";
    double gamma = 1.2;
    int n = 3;
    std::vector<double> radii{1e-1, 1e-2, 1e-3, 1e-4};
    double outer = 1.0;
};

DiscreteField analyze_field(const AnalyzeArgs& a) {
    if (!a.field.empty()) return load_field(a.field);
    if (a.zero_field) return DiscreteField(build_unit_mesh(3, a.cells), 2);
    throw InvalidArgument("need --field <csv> or --zero-field");
}

int run_caccioppoli(const AnalyzeArgs& a, const Output& out) {
    const auto u = analyze_field(a);
    const auto t = load_tensor(a.tensor);
    auto spec = SampleSpec::box(t.n(), t.N(), 10.0, 101, 2);
    const auto report = check_structure(t, spec);
    if (!report.passed_A2) throw InvalidArgument("tensor is not elliptic on the sample set");
    const auto k = StructureConstants::from_report(report, t.n(), t.N());
    const auto c = center_or_mid(a.center, u.mesh());
    json rows = json::array();
    bool ok = true;
    for (double L : a.L) {
        const CaccioppoliCheckSpec cs{c, a.s, a.t, L};
        const auto sides = caccioppoli_sides(t, u, cs, k);
        rows.push_back(sides_json(sides, cs));
        ok = ok && sides.ratio <= 1.0;
    }
    json j = {{"tensor", t.kind()},
              {"constants", {{"c", k.c}, {"n", k.n}, {"N", k.N}, {"nu", k.nu}, {"L0", k.L0}}},
              {"levels", rows},
              {"all_ratios_at_most_one", ok}};
    out.emit("caccioppoli.json", json_text(j));
    return ok ? kOk : kConditionFailed;
}

int run_excess(const AnalyzeArgs& a, const Output& out) {
    const auto u = analyze_field(a);
    const auto c = center_or_mid(a.center, u.mesh());
    const double ps = a.p_star.value_or(sobolev_conjugate(u.mesh().n(), a.p));
    const double R0 = admissible_radius(u, c, ps);
    const double R = a.R.value_or(R0);
    if (R > R0) throw InvalidArgument("--R " + num(R) + " exceeds the admissible radius " + num(R0));
    const auto tr = excess_trace(u, c, R, a.d, a.H, {a.p, ps, 1.0});
    out.emit("excess_trace.csv", trace_csv(tr));
    return tr.non_increasing() ? kOk : kConditionFailed;
}

int run_cond19(const AnalyzeArgs& a, const Output& out) {
    const auto [first, last] = parse_range(a.scan);
    const auto rows = condition19_scan(first, last);
    std::ostringstream os;
    std::optional<std::int64_t> first_below;
    for (const auto& r : rows)
        if (r.below_threshold && !first_below) first_below = r.k;
    os << "# threshold=" << num(kCondition19Threshold);
    if (first_below) os << " first_below=" << *first_below;
    os << "\nk,ratio,threshold,below_threshold\n";
    for (const auto& r : rows)
        os << r.k << "," << num(r.ratio) << "," << num(kCondition19Threshold) << "," << (r.below_threshold ? 1 : 0) << "\n";
    out.emit("cond19_scan.csv", os.str());
    return kOk;
}

int run_radial_diag(const AnalyzeArgs& a, const Output& out) {
    const RadialField f{a.gamma, a.n};
    std::ostringstream os;
    os << "# gamma=" << num(a.gamma) << " n=" << a.n << " outer=" << num(a.outer) << "\n";
    os << "r,sup,seminorm\n";
    for (double r : a.radii) {
        const auto d = radial_diagnostics(f, r, a.outer);
        os << num(r) << "," << num(d.sup) << "," << num(d.seminorm) << "\n";
    }
    out.emit("radial_diagnostics.csv", os.str());
    return kOk;
}

// ---------------------------------------------------------------------------
// lemma

struct LemmaArgs {
    double A = 1.0;
    double lambda = 2.0;
    double gamma0 = 1.0;
    double J0 = 0.5;
    int steps = 40;
};

int run_lemma(const LemmaArgs& a, const Output& out) {
    const RecursionParams p{a.A, a.lambda, a.gamma0};
    const auto tr = simulate_recursion(p, a.J0, a.steps);
    std::ostringstream os;
    os << "# A=" << num(a.A) << " lambda=" << num(a.lambda) << " gamma=" << num(a.gamma0)
       << " threshold=" << num(tr.threshold) << "\n";
    if (tr.diverged_at) os << "# diverged_at=" << *tr.diverged_at << "\n";
    os << "h,J_h\n";
    for (std::size_t h = 0; h < tr.J.size(); ++h) os << h << "," << num(tr.J[h]) << "\n";
    out.emit("lemma_trace.csv", os.str());
    return tr.diverged_at ? kConditionFailed : kOk;
}

// ---------------------------------------------------------------------------
// radial: level search on interpolated x/|x|^gamma over shrinking cutoffs

struct RadialArgs {
    double gamma = 1.2;
    int cells = 16;
    double R = 0.2;
    std::vector<double> cutoffs{1e-1, 1e-2, 1e-3};
};

json radial_levels(const RadialArgs& a) {
    const RadialField f{a.gamma, 3};
    json rows = json::array();
    for (double r : a.cutoffs) {
        const auto u = radial_field_on_mesh(f, r, a.cells);
        std::vector<double> x0(3, 0.0);
        x0[0] = r;
        const auto b = boundedness_level(u, x0, a.R);
        const auto diag = radial_diagnostics(f, r, 1.0);
        rows.push_back({{"cutoff", r},
                        {"discrete_sup", u.max_component(0)},
                        {"sup", diag.sup},
                        {"seminorm", diag.seminorm},
                        {"upper", level_json(b.upper)},
                        {"lower", level_json(b.lower)}});
    }
    return rows;
}

int run_radial(const RadialArgs& a, const Output& out) {
    const auto rows = radial_levels(a);
    std::ostringstream os;
    os << "# gamma=" << num(a.gamma) << " cells=" << a.cells << " R=" << num(a.R) << "\n";
    os << "cutoff,discrete_sup,sup,seminorm,d\n";
    double prev = 0.0;
    bool monotone = true;
    for (const auto& r : rows) {
        const double d = r["upper"]["bounded"].get<bool>() ? r["upper"]["d"].get<double>()
                                                           : std::numeric_limits<double>::infinity();
        os << num(r["cutoff"].get<double>()) << "," << num(r["discrete_sup"].get<double>()) << ","
           << num(r["sup"].get<double>()) << "," << num(r["seminorm"].get<double>()) << "," << num(d) << "\n";
        monotone = monotone && d >= prev;
        prev = d;
    }
    out.emit("radial_levels.csv", os.str());
    return monotone ? kOk : kConditionFailed;
}

// ---------------------------------------------------------------------------
// example: the worked example end to end

struct ExampleArgs {
    int cells = 16;
    double amplitude = 3.0;
    double bounded_amplitude = 2.5;
};

int run_example(const ExampleArgs& a, const Output& out) {
    json j;
    bool ok = true;

    const auto t = build_example_tensor();
    const auto report = check_structure(t, SampleSpec::box(3, 2, 10.0, 101, 2));
    j["structure"] = to_json(report);
    ok = ok && report.all_passed() && report.c == 27.0 && report.L0 && *report.L0 == 1.0;

    json scan = json::array();
    std::optional<std::int64_t> first_below;
    for (const auto& r : condition19_scan(2, 20)) {
        scan.push_back({{"k", r.k}, {"ratio", r.ratio}, {"below_threshold", r.below_threshold}});
        if (r.below_threshold && !first_below) first_below = r.k;
    }
    j["condition19"] = {{"threshold", kCondition19Threshold},
                        {"first_k_below", first_below ? json(*first_below) : json(nullptr)},
                        {"scan", scan}};
    ok = ok && first_below && *first_below == 4;

    const auto lem = simulate_recursion({1, 2, 1}, 0.5, 40);
    j["lemma"] = {{"threshold", lem.threshold}, {"J_40", lem.J.back()}, {"diverged", lem.diverged_at.has_value()}};

    const auto k = StructureConstants::from_report(report, 3, 2);
    const std::vector<double> c{0.5, 0.5, 0.5};
    const auto mesh = build_unit_mesh(3, a.cells);
    const auto sol = picard_solve(t, mesh, boundary_preset("bounded_sine", 3, 2, a.amplitude));
    j["solve"] = {{"cells", a.cells},
                  {"amplitude", a.amplitude},
                  {"converged", sol.converged},
                  {"outer_iters", sol.outer_iters},
                  {"weak_residual", weak_residual(t, sol.field)}};
    if (!sol.converged) {
        out.emit("example.json", json_text(j));
        return kNotConverged;
    }
    json cac = json::array();
    for (double L : {1.0, 1.5, 2.0}) {
        const CaccioppoliCheckSpec cs{c, 0.15, 0.3, L};
        const auto sides = caccioppoli_sides(t, sol.field, cs, k);
        cac.push_back(sides_json(sides, cs));
        ok = ok && sides.ratio <= 1.0;
    }
    j["caccioppoli"] = cac;

    const auto bsol = picard_solve(t, mesh, boundary_preset("bounded_sine", 3, 2, a.bounded_amplitude));
    if (!bsol.converged) {
        out.emit("example.json", json_text(j));
        return kNotConverged;
    }
    const double ps = sobolev_conjugate(3, 2.0);
    const double R = 0.9 * admissible_radius(bsol.field, c, ps);
    BoundednessOptions bo;
    bo.min_level = 2.0 * k.L0;
    const auto b = boundedness_level(bsol.field, c, R, 0.0, bo);
    const auto tr = excess_trace(bsol.field, c, R, 2.0 * k.L0, 12);
    j["boundedness"] = {{"amplitude", a.bounded_amplitude},
                        {"R", R},
                        {"upper", level_json(b.upper)},
                        {"lower", level_json(b.lower)},
                        {"trace_at_min_level", trace_json(tr)}};
    ok = ok && b.upper.bounded && b.lower.bounded && tr.non_increasing();
    j["all_checks_passed"] = ok;
    out.emit("example.json", json_text(j));
    return ok ? kOk : kConditionFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structure checks, Picard solves and De Giorgi level-set analysis for quasilinear elliptic systems"};
    app.require_subcommand(1);
    Output out;
    auto add_out = [&](CLI::App* sub) { sub->add_option("--out", out.dir, "Directory for report files"); };

    CheckArgs ca;
    auto* check = app.add_subcommand("check", "Certify boundedness, ellipticity and staircase support of a tensor");
    check->add_option("--tensor", ca.tensor, "Preset name or tensor JSON file");
    check->add_option("--config", ca.config, "JSON with tensor, samples {y_extent, y_points, x_points}, L_grid");
    check->add_option("--y-extent", ca.y_extent, "Half-width of the sampled y box")->check(CLI::PositiveNumber);
    check->add_option("--y-points", ca.y_points, "Grid points per y axis")->check(CLI::PositiveNumber);
    check->add_option("--x-points", ca.x_points, "Grid points per x axis")->check(CLI::PositiveNumber);
    check->add_option("--L-grid", ca.L_grid, "Increasing thresholds for the staircase condition")->delimiter(',');
    add_out(check);

    SolveArgs sa;
    auto* solve = app.add_subcommand("solve", "Picard iteration for the Dirichlet problem on a box");
    solve->add_option("--config", sa.config, "Solve configuration JSON");
    solve->add_option("--tensor", sa.tensor, "Preset name or tensor JSON file (overrides config)");
    solve->add_option("--cells", sa.cells, "Cells per axis (overrides config)")->check(CLI::PositiveNumber);
    solve->add_option("--boundary", sa.boundary, "Boundary preset: linear, bounded_sine, constant");
    solve->add_option("--amplitude", sa.amplitude, "Boundary amplitude");
    solve->add_flag("--timing", sa.timing, "Record wall time in the run report");
    add_out(solve);

    AnalyzeArgs aa;
    auto* analyze = app.add_subcommand("analyze", "Estimates on a computed field");
    analyze->require_subcommand(1);
    auto field_opts = [&](CLI::App* sub) {
        sub->add_option("--field", aa.field, "Solution CSV (mesh sidecar alongside)");
        sub->add_flag("--zero-field", aa.zero_field, "Use the zero field on the unit cube");
        sub->add_option("--cells", aa.cells, "Cells per axis for --zero-field")->check(CLI::PositiveNumber);
        sub->add_option("--center", aa.center, "Ball center (default: box midpoint)")->delimiter(',');
        add_out(sub);
    };
    auto* cac = analyze->add_subcommand("caccioppoli", "Both sides of the superlevel Caccioppoli inequality");
    field_opts(cac);
    cac->add_option("--tensor", aa.tensor, "Tensor the field solves");
    cac->add_option("--s", aa.s, "Inner radius");
    cac->add_option("--t", aa.t, "Outer radius");
    cac->add_option("--L", aa.L, "Levels")->delimiter(',');
    auto* exc = analyze->add_subcommand("excess", "Excess trace along the level and radius schedules");
    field_opts(exc);
    exc->add_option("--d", aa.d, "Target level d >= 1");
    exc->add_option("--R", aa.R, "Base radius (default: admissible radius)");
    exc->add_option("--H", aa.H, "Number of steps")->check(CLI::Range(2, 1000));
    exc->add_option("--p", aa.p, "Exponent p");
    exc->add_option("--pstar", aa.p_star, "Exponent p* (default: Sobolev conjugate)");
    auto* c19 = analyze->add_subcommand("cond19", "Closed-form violation ratio of the growth condition");
    c19->add_option("--scan", aa.scan, "Range of k, a..b");
    add_out(c19);
    auto* rad = analyze->add_subcommand("radial", "Sup and W^{1,2} seminorm of x/|x|^gamma on annuli");
    rad->add_option("--gamma", aa.gamma, "Exponent gamma >= 1");
    rad->add_option("--n", aa.n, "Dimension");
    rad->add_option("--r", aa.radii, "Inner radii")->delimiter(',');
    rad->add_option("--outer", aa.outer, "Outer radius <= 1");
    add_out(rad);

    LemmaArgs la;
    auto* lemma = app.add_subcommand("lemma", "Equality recursion J_{h+1} = A lambda^h J_h^{1+gamma}");
    lemma->add_option("--A", la.A, "Factor A > 0");
    lemma->add_option("--lambda", la.lambda, "Base lambda > 1");
    lemma->add_option("--gamma0", la.gamma0, "Exponent increment gamma > 0");
    lemma->add_option("--J0", la.J0, "Initial value");
    lemma->add_option("--steps", la.steps, "Number of steps")->check(CLI::PositiveNumber);
    add_out(lemma);

    RadialArgs ra;
    auto* radial = app.add_subcommand("radial", "Level search on x/|x|^gamma meshed away from the origin");
    radial->add_option("--gamma", ra.gamma, "Exponent gamma >= 1");
    radial->add_option("--cells", ra.cells, "Cells per axis (even)");
    radial->add_option("--R", ra.R, "Base radius of the level search");
    radial->add_option("--cutoffs", ra.cutoffs, "Inner cutoffs")->delimiter(',');
    add_out(radial);

    ExampleArgs ea;
    auto* example = app.add_subcommand("example", "The n = 3, N = 2 example end to end, one JSON report");
    example->add_option("--cells", ea.cells, "Cells per axis")->check(CLI::PositiveNumber);
    example->add_option("--amplitude", ea.amplitude, "Boundary amplitude for the Caccioppoli check");
    example->add_option("--bounded-amplitude", ea.bounded_amplitude, "Boundary amplitude for the level search");
    add_out(example);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (check->parsed()) return run_check(ca, out);
        if (solve->parsed()) return run_solve(sa, out);
        if (cac->parsed()) return run_caccioppoli(aa, out);
        if (exc->parsed()) return run_excess(aa, out);
        if (c19->parsed()) return run_cond19(aa, out);
        if (rad->parsed()) return run_radial_diag(aa, out);
        if (lemma->parsed()) return run_lemma(la, out);
        if (radial->parsed()) return run_radial(ra, out);
        if (example->parsed()) return run_example(ea, out);
    } catch (const InvalidArgument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const FormatError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const LinearSolveError& e) {
        std::cerr << "linear solve failed: " << e.what() << "\n";
        return kNotConverged;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConditionFailed;
    }
    return kUsage;
}
