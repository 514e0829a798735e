#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sphere_oep/annulus_pde.hpp"
#include "sphere_oep/error.hpp"
#include "sphere_oep/levelset_geometry.hpp"
#include "sphere_oep/model_profiles.hpp"
#include "sphere_oep/reporting.hpp"
#include "sphere_oep/tau.hpp"

using namespace sphere_oep;
using nlohmann::json;

namespace {

struct Globals {
    std::string f = "affine:2,0";
    std::string out;
    std::string format = "csv";
    double tol = 1e-12;
};

class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw Error("cannot open " + path + " for writing");
        }
        stream().precision(15);
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

std::string cell(const json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) {
        std::ostringstream os;
        os << std::setprecision(15) << v.get<double>();
        return os.str();
    }
    return v.dump();
}

/// One flat row as CSV (header + values) or as a JSON object.
void emit_row(const Globals& g, const json& row) {
    Output out(g.out);
    if (g.format == "json") {
        out.stream() << row.dump(2) << '\n';
        return;
    }
    std::string header, values;
    bool first = true;
    for (const auto& [k, v] : row.items()) {
        if (!first) header += ',', values += ',';
        first = false;
        header += k;
        values += cell(v);
    }
    out.stream() << header << '\n' << values << '\n';
}

/// Columnar table: CSV with a header row, or a JSON array of objects.
void emit_table(const Globals& g, const std::vector<std::string>& columns,
                const std::vector<std::vector<double>>& rows) {
    Output out(g.out);
    if (g.format == "json") {
        json arr = json::array();
        for (const auto& r : rows) {
            json o;
            for (std::size_t k = 0; k < columns.size(); ++k) o[columns[k]] = r[k];
            arr.push_back(o);
        }
        out.stream() << arr.dump(2) << '\n';
        return;
    }
    for (std::size_t k = 0; k < columns.size(); ++k) out.stream() << (k ? "," : "") << columns[k];
    out.stream() << '\n';
    for (const auto& r : rows) {
        for (std::size_t k = 0; k < r.size(); ++k) out.stream() << (k ? "," : "") << r[k];
        out.stream() << '\n';
    }
}

GridSolution load_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read grid solution " + path);
    return read_grid_solution(in);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model solutions, comparison estimates and PDE checks for Δu + f(u) = 0 on the sphere"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(tool_version));
    Globals g;
    app.add_option("--f", g.f, "nonlinearity, affine:a,b")->capture_default_str();
    app.add_option("--out", g.out, "output file (default stdout)");
    app.add_option("--format", g.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app.add_option("--tol", g.tol, "solver tolerance")->capture_default_str();

    double R = 0.0, M = 1.0, tau = 0.0;
    double s1 = 0.0, s2 = 0.0, eps = 0.0, eps_outer = 0.0, fit_tol = 1e-6;
    int mode = 3;
    std::size_t n_s = 64, n_theta = 64, threads = 0;
    std::string grid_file, save_grid, config_file, sweep_cmd;
    std::vector<std::string> axes, sets;
    std::vector<double> levels;
    bool samples = false, print_config = false, with_max = false;

    auto* profile = app.add_subcommand("profile", "annular model solution U_{R,M}");
    profile->add_option("--R", R, "height of the maximum")->capture_default_str();
    profile->add_option("--M", M, "maximum value")->capture_default_str();
    profile->add_flag("--samples", samples, "emit the tabulated profile r,U,dU,Z,G");

    auto* disk = app.add_subcommand("disk", "geodesic-disk solution and h(M)");
    disk->add_option("--M", M)->capture_default_str();
    disk->add_flag("--samples", samples, "emit s,V,dV");

    auto* tau_cmd = app.add_subcommand("tau", "normalized boundary gradients over the height grid");
    tau_cmd->add_option("--M", M)->capture_default_str();
    tau_cmd->add_flag("--samples", samples, "emit R,tau1,tau2,grad1,grad2");

    auto* invert = app.add_subcommand("invert-tau", "expected critical height for a τ value");
    invert->add_option("--M", M)->capture_default_str();
    invert->add_option("--tau", tau)->required();

    auto* solve = app.add_subcommand("solve", "Newton solve of the Dirichlet problem on an annulus");
    solve->add_option("--R", R, "model whose zeros define the annulus")->capture_default_str();
    solve->add_option("--M", M)->capture_default_str();
    auto* o_s1 = solve->add_option("--s1", s1, "north boundary colatitude");
    auto* o_s2 = solve->add_option("--s2", s2, "south boundary colatitude");
    o_s1->needs(o_s2);
    o_s2->needs(o_s1);
    solve->add_option("--n-s", n_s)->capture_default_str();
    solve->add_option("--n-theta", n_theta)->capture_default_str();
    solve->add_option("--epsilon", eps, "amplitude of the north boundary perturbation")->capture_default_str();
    solve->add_option("--epsilon-outer", eps_outer, "amplitude on the south boundary")->capture_default_str();
    solve->add_option("--mode", mode)->capture_default_str();
    solve->add_option("--save-grid", save_grid, "write the grid solution file");

    auto* fit = app.add_subcommand("fit", "model (R, M) whose zeros match an annulus");
    fit->add_option("--s1", s1)->required();
    fit->add_option("--s2", s2)->required();
    fit->add_option("--residual-tol", fit_tol, "accepted boundary mismatch")->capture_default_str();

    auto* verify = app.add_subcommand("verify", "run the invariant suite; exit status 1 on any failure");
    verify->add_option("--config", config_file, "JSON configuration")->check(CLI::ExistingFile);
    verify->add_flag("--print-config", print_config, "print the built-in configuration and exit");

    auto* sweep = app.add_subcommand("sweep", "run a subcommand over a parameter grid");
    sweep->add_option("subcommand", sweep_cmd)->required();
    sweep->add_option("--grid", axes, "axis name=v1,v2 or name=lo:step:hi")->required();
    sweep->add_option("--set", sets, "fixed parameter name=value");
    sweep->add_option("--threads", threads, "0: all cores")->capture_default_str();

    auto* radial = app.add_subcommand("radial-graph", "contact cosines of the radial graph");
    radial->add_option("--R", R)->capture_default_str();
    radial->add_option("--M", M)->capture_default_str();
    radial->add_option("--n-theta", n_theta)->capture_default_str();
    radial->add_option("--grid", grid_file, "grid solution file instead of a model")->check(CLI::ExistingFile);

    auto* curves = app.add_subcommand("level-curves", "level curves of a grid solution");
    curves->add_option("--grid", grid_file)->required()->check(CLI::ExistingFile);
    curves->add_option("--level", levels, "level value (repeatable)");
    curves->add_flag("--max", with_max, "include the ridge");

    CLI11_PARSE(app, argc, argv);

    try {
        const Nonlinearity f = Nonlinearity::parse(g.f);
        json base = {{"f", g.f}, {"tol", g.tol}};

        if (*profile) {
            if (!samples) {
                emit_row(g, run_subcommand("profile", {{"f", g.f}, {"R", R}, {"M", M}, {"tol", g.tol}}));
                return 0;
            }
            const ModelProfile p = solve_annulus_profile(f, R, M, g.tol);
            std::vector<std::vector<double>> rows;
            for (const auto& s : p.samples()) rows.push_back({s.r, s.U, s.dU, s.Z, s.G});
            emit_table(g, {"r", "U", "dU", "Z", "G"}, rows);
        } else if (*disk) {
            if (!samples) {
                emit_row(g, run_subcommand("disk", {{"f", g.f}, {"M", M}, {"tol", g.tol}}));
                return 0;
            }
            const DiskProfile d = solve_disk_profile(f, M, g.tol);
            std::vector<std::vector<double>> rows;
            for (const auto& s : d.samples()) rows.push_back({s.s, s.V, s.dV});
            emit_table(g, {"s", "V", "dV"}, rows);
        } else if (*tau_cmd) {
            if (!samples) {
                emit_row(g, run_subcommand("tau", {{"f", g.f}, {"M", M}, {"tol", g.tol}}));
                return 0;
            }
            const TauCurve c = build_tau_curve(f, M, default_tau_grid(), g.tol);
            std::vector<std::vector<double>> rows;
            for (std::size_t k = 0; k < c.grid.size(); ++k)
                rows.push_back({c.grid[k], c.tau1[k], c.tau2[k], c.grad1[k], c.grad2[k]});
            emit_table(g, {"R", "tau1", "tau2", "grad1", "grad2"}, rows);
        } else if (*invert) {
            emit_row(g, run_subcommand("invert-tau", {{"f", g.f}, {"M", M}, {"tau", tau}, {"tol", g.tol}}));
        } else if (*solve) {
            DomainSpec d;
            if (*o_s1) {
                d.s1 = s1;
                d.s2 = s2;
            } else {
                const ModelProfile m = solve_annulus_profile(f, R, M);
                d.s1 = m.boundary(ZeroEnd::r2).pole_distance;
                d.s2 = std::numbers::pi - m.boundary(ZeroEnd::r1).pole_distance;
            }
            d.n_s = n_s;
            d.n_theta = n_theta;
            d.inner = {eps, mode};
            d.outer = {eps_outer, mode};
            d.validate();
            ModelProfile guess = solve_annulus_profile(f, R, M);
            if (*o_s1) {
                const ModelFit mf = fit_model_to_annulus(s1, s2, f, 1e-6);
                guess = solve_annulus_profile(f, mf.R, mf.M);
            }
            const double newton_tol = std::max(g.tol, 1e-10);
            const GridSolution u = solve_dirichlet(d, f, profile_guess(d, guess), newton_tol);
            if (!save_grid.empty()) {
                std::ofstream out(save_grid);
                if (!out) throw Error("cannot open " + save_grid + " for writing");
                write_grid_solution(out, u);
            }
            json row = u.header();
            row.erase("domain");
            row["peak"] = u.peak_value();
            json flat;
            for (const auto& [k, v] : row.items())
                if (!v.is_structured()) flat[k] = v;
            emit_row(g, flat);
        } else if (*fit) {
            emit_row(g, run_subcommand("fit", {{"f", g.f}, {"s1", s1}, {"s2", s2}, {"tol", fit_tol}}));
        } else if (*verify) {
            if (print_config) {
                Output out(g.out);
                out.stream() << default_verify_config().dump(2) << '\n';
                return 0;
            }
            json config = json::object();
            if (!config_file.empty()) {
                std::ifstream in(config_file);
                config = json::parse(in);
            }
            const VerifySummary s = verify_all(config);
            for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
            Output out(g.out);
            if (g.format == "json") {
                out.stream() << json(s).dump(2) << '\n';
            } else {
                out.stream() << "# version " << s.version << " config " << s.config_hash << '\n';
                out.stream() << "check,status,margin\n";
                for (const auto& c : s.checks)
                    out.stream() << c.name << ',' << (c.pass ? "PASS" : "FAIL") << ',' << c.margin << '\n';
            }
            return s.exit_status();
        } else if (*sweep) {
            json params = base;
            for (const auto& kv : sets) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos || eq == 0) throw DomainError("--set expects name=value: " + kv);
                const std::string value = kv.substr(eq + 1);
                try {
                    std::size_t used = 0;
                    const double x = std::stod(value, &used);
                    params[kv.substr(0, eq)] = used == value.size() ? json(x) : json(value);
                } catch (const std::invalid_argument&) {
                    params[kv.substr(0, eq)] = value;
                }
            }
            ParameterGrid grid;
            for (const auto& a : axes) grid.push_back(parse_grid_axis(a));
            const SweepTable t = run_sweep(sweep_cmd, params, grid, static_cast<unsigned>(threads));
            Output out(g.out);
            if (g.format == "json") {
                json arr = json::array();
                for (std::size_t k = 0; k < t.size(); ++k) {
                    json row = t.points[k];
                    if (t.results[k].is_object()) row.update(t.results[k]);
                    row["failure"] = t.failures[k];
                    arr.push_back(row);
                }
                out.stream() << json{{"version", tool_version}, {"config_hash", config_hash(params)}, {"rows", arr}}
                                    .dump(2)
                             << '\n';
            } else {
                write_sweep_csv(out.stream(), t);
            }
        } else if (*radial) {
            const RadialGraphSample graph = grid_file.empty()
                                                ? radial_graph(solve_annulus_profile(f, R, M, g.tol), n_theta)
                                                : radial_graph(load_grid(grid_file));
            Output out(g.out);
            if (g.format == "json") {
                out.stream() << json{{"M", graph.M}, {"stats", graph.stats}}.dump(2) << '\n';
            } else {
                write_radial_graph_csv(out.stream(), graph);
            }
        } else if (*curves) {
            const GridSolution u = load_grid(grid_file);
            std::vector<LevelCurve> all;
            for (double c : levels)
                for (auto& curve : extract_level_curve(u, c).curves) all.push_back(std::move(curve));
            if (with_max) {
                LevelCurve ridge = extract_max_curve(u);
                ridge.level = u.peak_value();
                all.push_back(std::move(ridge));
            }
            Output out(g.out);
            if (g.format == "json") {
                out.stream() << json(all).dump(2) << '\n';
            } else {
                out.stream() << "curve,level,s,theta,x,y,z,kappa\n";
                for (std::size_t k = 0; k < all.size(); ++k) {
                    const auto& c = all[k];
                    for (std::size_t v = 0; v < c.size(); ++v) {
                        const Vec3 p = sphere_point(c.s[v], c.theta[v]);
                        out.stream() << k << ',' << c.level << ',' << c.s[v] << ',' << c.theta[v] << ',' << p[0]
                                     << ',' << p[1] << ',' << p[2] << ',' << c.curvature[v] << '\n';
                    }
                }
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
