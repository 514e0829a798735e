#include "sphere_oep/reporting.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "sphere_oep/annulus_pde.hpp"
#include "sphere_oep/comparison.hpp"
#include "sphere_oep/error.hpp"
#include "sphere_oep/levelset_geometry.hpp"
#include "sphere_oep/model_profiles.hpp"
#include "sphere_oep/tau.hpp"

#ifndef SPHERE_OEP_SOURCE_DIR
#define SPHERE_OEP_SOURCE_DIR "."
#endif

namespace sphere_oep {

using nlohmann::json;

std::string config_hash(const json& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

Nonlinearity nonlinearity_from_json(const json& j) {
    if (j.is_string()) return Nonlinearity::parse(j.get<std::string>());
    return Nonlinearity::from_json(j);
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

// ---------------------------------------------------------------------------
// GoldenStore

std::string GoldenStore::default_path() {
    if (const char* env = std::getenv("SPHERE_OEP_GOLDEN"); env && *env) return env;
    return std::string(SPHERE_OEP_SOURCE_DIR) + "/golden/golden.json";
}

GoldenStore GoldenStore::load(const std::string& path) {
    GoldenStore store;
    std::ifstream in(path);
    if (!in) return store;
    const json doc = json::parse(in);
    for (const auto& e : doc.at("entries")) {
        GoldenKey key;
        key.f = Nonlinearity::parse(e.at("f").get<std::string>()).descriptor();
        key.M = e.at("M").get<double>();
        if (e.contains("R") && !e.at("R").is_null()) key.R = e.at("R").get<double>();
        key.quantity = e.at("quantity").get<std::string>();
        GoldenEntry entry;
        entry.value = e.at("value").get<double>();
        entry.tolerance = e.at("tolerance").get<double>();
        entry.oracle = e.value("oracle", "");
        entry.timestamp = e.value("timestamp", "");
        store.insert(std::move(key), std::move(entry));
    }
    return store;
}

void GoldenStore::save(const std::string& path) const {
    json entries = json::array();
    for (const auto& [k, e] : entries_) {
        entries.push_back({{"f", k.f},
                           {"M", k.M},
                           {"R", k.R ? json(*k.R) : json(nullptr)},
                           {"quantity", k.quantity},
                           {"value", e.value},
                           {"tolerance", e.tolerance},
                           {"oracle", e.oracle},
                           {"timestamp", e.timestamp}});
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write golden store " + path);
    out << std::setprecision(17) << json{{"version", tool_version}, {"entries", entries}}.dump(2) << '\n';
}

void GoldenStore::insert(GoldenKey key, GoldenEntry entry) {
    if (entry.oracle.empty()) throw DomainError("golden value '" + key.quantity + "' has no oracle description");
    if (!(entry.tolerance >= 0.0)) throw DomainError("golden tolerance must be nonnegative");
    entries_[std::move(key)] = std::move(entry);
}

std::optional<GoldenEntry> GoldenStore::find(const GoldenKey& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

double measure_golden(const GoldenKey& key, double tol) {
    const Nonlinearity f = Nonlinearity::parse(key.f);
    const auto& q = key.quantity;
    if (q == "r1" || q == "r2" || q == "grad_r1" || q == "grad_r2") {
        if (!key.R) throw DomainError("golden quantity '" + q + "' needs R");
        const ModelProfile p = solve_annulus_profile(f, *key.R, key.M, tol);
        if (q == "r1") return p.r1();
        if (q == "r2") return p.r2();
        return boundary_gradient(p, q == "grad_r1" ? ZeroEnd::r1 : ZeroEnd::r2);
    }
    if (q == "tau0") return build_tau_curve(f, key.M, {0.0}, tol).tau0;
    if (q == "h") return compute_h(f, key.M, tol);
    if (q == "s_M") return solve_disk_profile(f, key.M, tol).s_M();
    throw DomainError("unknown golden quantity '" + q + "'");
}

// ---------------------------------------------------------------------------
// Subcommands

namespace {

Nonlinearity param_f(const json& p) { return nonlinearity_from_json(p.value("f", json("affine:2,0"))); }
double param(const json& p, const char* name, double fallback) {
    if (!p.contains(name)) return fallback;
    const json& v = p.at(name);
    if (v.is_string()) return std::stod(v.get<std::string>());
    return v.get<double>();
}
std::size_t param_size(const json& p, const char* name, std::size_t fallback) {
    return static_cast<std::size_t>(std::llround(param(p, name, static_cast<double>(fallback))));
}

/// Annulus from explicit s1/s2 or from the zeros of the model at (R, M).
DomainSpec domain_from(const json& p, const Nonlinearity& f) {
    DomainSpec d;
    if (p.contains("s1") && p.contains("s2")) {
        d.s1 = param(p, "s1", 0.0);
        d.s2 = param(p, "s2", 0.0);
    } else {
        const ModelProfile m = solve_annulus_profile(f, param(p, "R", 0.0), param(p, "M", 1.0));
        d.s1 = m.boundary(ZeroEnd::r2).pole_distance;
        d.s2 = std::numbers::pi - m.boundary(ZeroEnd::r1).pole_distance;
    }
    d.n_s = param_size(p, "n_s", 64);
    d.n_theta = param_size(p, "n_theta", 64);
    const int mode = static_cast<int>(param(p, "mode", 3));
    d.inner = {param(p, "epsilon", 0.0), mode};
    d.outer = {param(p, "epsilon_outer", 0.0), mode};
    d.validate();
    return d;
}

/// Newton solve from the model profile that best matches the annulus.
GridSolution solve_from(const json& p, const Nonlinearity& f, const DomainSpec& d) {
    const double tol = param(p, "tol", 1e-10);
    ModelProfile guess = solve_annulus_profile(f, param(p, "R", 0.0), param(p, "M", 1.0));
    if (p.contains("s1") && p.contains("s2")) {
        const ModelFit fit = fit_model_to_annulus(d.s1, d.s2, f, 1e-6);
        guess = solve_annulus_profile(f, fit.R, fit.M);
    }
    return solve_dirichlet(d, f, profile_guess(d, guess), tol);
}

json cmd_profile(const json& p) {
    const ModelProfile m = solve_annulus_profile(param_f(p), param(p, "R", 0.0), param(p, "M", 1.0),
                                                 param(p, "tol", 1e-12));
    return {{"r1", m.r1()},
            {"r2", m.r2()},
            {"grad_r1", boundary_gradient(m, ZeroEnd::r1)},
            {"grad_r2", boundary_gradient(m, ZeroEnd::r2)},
            {"pinched", m.pinched()}};
}

json cmd_disk(const json& p) {
    const DiskProfile d = solve_disk_profile(param_f(p), param(p, "M", 1.0), param(p, "tol", 1e-12));
    return {{"h", d.h()}, {"s_M", d.s_M()}};
}

json cmd_tau(const json& p) {
    const TauCurve c = build_tau_curve(param_f(p), param(p, "M", 1.0), default_tau_grid(), param(p, "tol", 1e-12));
    return {{"tau0", c.tau0},
            {"h", c.h},
            {"tau1_decreasing", c.tau1_decreasing},
            {"tau2_increasing", c.tau2_increasing}};
}

json cmd_invert_tau(const json& p) {
    if (!p.contains("tau")) throw DomainError("invert-tau needs tau");
    const TauCurve c = build_tau_curve(param_f(p), param(p, "M", 1.0), default_tau_grid(), param(p, "tol", 1e-12));
    const CriticalHeight h = expected_critical_height(c, param(p, "tau", 0.0));
    return {{"R", h.R}, {"branch", to_string(h.branch)}, {"tau0", c.tau0}};
}

json cmd_solve(const json& p) {
    const Nonlinearity f = param_f(p);
    const DomainSpec d = domain_from(p, f);
    const GridSolution u = solve_from(p, f, d);
    json row = {{"u_max", u.u_max()}, {"peak", u.peak_value()}, {"iterations", u.iterations()},
                {"residual", u.residual()}};
    row["spectral_factor"] = u.spectral_factor() ? json(*u.spectral_factor()) : json(nullptr);
    return row;
}

json cmd_fit(const json& p) {
    const ModelFit fit = fit_model_to_annulus(param(p, "s1", 0.0), param(p, "s2", 0.0), param_f(p),
                                              param(p, "tol", 1e-10));
    return {{"R", fit.R}, {"M", fit.M}, {"M_pinned", fit.M_pinned}, {"residual", fit.residual},
            {"iterations", fit.iterations}};
}

json cmd_radial_graph(const json& p) {
    const ModelProfile m = solve_annulus_profile(param_f(p), param(p, "R", 0.0), param(p, "M", 1.0));
    const RadialGraphSample g = radial_graph(m, param_size(p, "n_theta", 64));
    json row;
    for (const auto& st : g.stats) {
        const std::string c = to_string(st.curve);
        row[c + "_mean"] = st.mean;
        row[c + "_stddev"] = st.stddev;
    }
    return row;
}

json cmd_verify(const json& p) {
    json config = default_verify_config();
    config.merge_patch(p);
    const VerifySummary s = verify_all(config);
    std::size_t failed = 0;
    for (const auto& c : s.checks) failed += c.pass ? 0 : 1;
    return {{"pass", s.all_pass()}, {"checks", s.checks.size()}, {"failed", failed}};
}

}  // namespace

const std::map<std::string, Subcommand>& subcommands() {
    static const std::map<std::string, Subcommand> table = {
        {"profile", cmd_profile},   {"disk", cmd_disk},   {"tau", cmd_tau},
        {"invert-tau", cmd_invert_tau}, {"solve", cmd_solve}, {"fit", cmd_fit},
        {"radial-graph", cmd_radial_graph}, {"verify", cmd_verify},
    };
    return table;
}

json run_subcommand(const std::string& name, const json& params) {
    const auto& table = subcommands();
    const auto it = table.find(name);
    if (it == table.end()) throw UnknownSubcommand("unknown subcommand '" + name + "'");
    return it->second(params);
}

// ---------------------------------------------------------------------------
// Sweeps

SweepTable run_sweep(const std::string& subcommand, const json& base, const ParameterGrid& grid,
                     unsigned threads) {
    if (!subcommands().contains(subcommand)) throw UnknownSubcommand("unknown subcommand '" + subcommand + "'");
    if (grid.empty()) throw DomainError("sweep grid is empty");
    std::size_t total = 1;
    for (const auto& [name, values] : grid) {
        if (values.empty()) throw DomainError("sweep axis '" + name + "' is empty");
        total *= values.size();
    }

    SweepTable table;
    for (const auto& axis : grid) table.grid_columns.push_back(axis.first);
    table.points.resize(total);
    table.results.resize(total);
    table.failures.resize(total);
    for (std::size_t k = 0; k < total; ++k) {
        json point = json::object();
        std::size_t rest = k;
        for (auto axis = grid.rbegin(); axis != grid.rend(); ++axis) {
            point[axis->first] = axis->second[rest % axis->second.size()];
            rest /= axis->second.size();
        }
        table.points[k] = point;
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < total; k = next++) {
            json params = base.is_object() ? base : json::object();
            params.merge_patch(table.points[k]);
            try {
                table.results[k] = run_subcommand(subcommand, params);
            } catch (const std::exception& e) {
                table.failures[k] = e.what();
            }
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (const auto& r : table.results) {
        if (!r.is_object()) continue;
        for (const auto& [key, value] : r.items())
            if (std::find(table.result_columns.begin(), table.result_columns.end(), key) == table.result_columns.end())
                table.result_columns.push_back(key);
    }
    return table;
}

namespace {

std::string csv_cell(const json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string quoted = "\"";
        for (char c : s) {
            if (c == '"') quoted += '"';
            quoted += c;
        }
        return quoted + '"';
    }
    if (v.is_number_float()) {
        std::ostringstream os;
        os << std::setprecision(12) << v.get<double>();
        return os.str();
    }
    return v.dump();
}

}  // namespace

void write_sweep_csv(std::ostream& out, const SweepTable& table) {
    bool first = true;
    auto sep = [&] {
        if (!first) out << ',';
        first = false;
    };
    for (const auto& c : table.grid_columns) sep(), out << c;
    for (const auto& c : table.result_columns) sep(), out << c;
    sep(), out << "failure\n";
    for (std::size_t k = 0; k < table.size(); ++k) {
        first = true;
        for (const auto& c : table.grid_columns) sep(), out << csv_cell(table.points[k].at(c));
        for (const auto& c : table.result_columns) {
            sep();
            const json& r = table.results[k];
            if (r.is_object() && r.contains(c)) out << csv_cell(r.at(c));
        }
        sep(), out << csv_cell(table.failures[k]) << '\n';
    }
}

std::pair<std::string, std::vector<json>> parse_grid_axis(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos || eq == 0) throw DomainError("grid axis must look like name=values");
    std::string name(text.substr(0, eq));
    std::string rest(text.substr(eq + 1));
    std::vector<json> values;
    auto number_or_string = [](const std::string& s) -> json {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
        return s;
    };
    if (std::count(rest.begin(), rest.end(), ':') == 2 && rest.find(',') == std::string::npos) {
        const auto c1 = rest.find(':');
        const auto c2 = rest.find(':', c1 + 1);
        const double lo = std::stod(rest.substr(0, c1));
        const double step = std::stod(rest.substr(c1 + 1, c2 - c1 - 1));
        const double hi = std::stod(rest.substr(c2 + 1));
        if (!(step > 0.0) || hi < lo) throw DomainError("range axis needs lo <= hi and step > 0");
        const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
        for (std::size_t k = 0; k <= n; ++k) values.emplace_back(lo + step * static_cast<double>(k));
    } else {
        // ';' separates values that themselves contain commas (affine:2,0;affine:2,1)
        const char sep = rest.find(';') != std::string::npos ? ';' : ',';
        std::stringstream ss(rest);
        std::string item;
        while (std::getline(ss, item, sep)) values.push_back(number_or_string(item));
    }
    if (values.empty()) throw DomainError("grid axis '" + name + "' has no values");
    return {std::move(name), std::move(values)};
}

// ---------------------------------------------------------------------------
// Verification suite

bool VerifySummary::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

json default_verify_config() {
    json r_grid = json::array();
    for (double R : default_tau_grid()) r_grid.push_back(R);
    return {{"nonlinearities", {"affine:2,0", "affine:2,1"}},
            {"M", {1.0}},
            {"R_grid", r_grid},
            {"condition_samples", 1000},
            {"tolerances", {{"profile", 1e-12}, {"round_trip", 1e-6}, {"equality", 1e-6}}},
            {"pde", {{"enabled", true}, {"n", 64}, {"epsilon", 0.01}, {"mode", 3}, {"slack", 5e-3}}},
            {"golden", {{"ci", false}}}};
}

namespace {

struct Suite {
    VerifySummary& summary;
    std::string prefix;

    void add(const std::string& name, bool pass, double margin, json detail = json::object()) {
        summary.checks.push_back({prefix + name, pass, margin, std::move(detail)});
    }
    void add_sign(const std::string& name, const SignCheck& worst, double worst_R) {
        add(name, worst.pass, worst.worst_margin, {{"R", worst_R}, {"r", worst.worst_r}});
    }
};

/// Keeps the failing/smallest margin over a loop.
void fold(SignCheck& acc, double& acc_R, const SignCheck& c, double R, bool first) {
    if (first || c.worst_margin < acc.worst_margin) {
        acc.worst_margin = c.worst_margin;
        acc.worst_r = c.worst_r;
        acc_R = R;
    }
    acc.pass = (first ? true : acc.pass) && c.pass;
}

void model_checks(Suite& s, const Nonlinearity& f, double M, const std::vector<double>& R_grid, const json& tols) {
    const double ptol = tols.value("profile", 1e-12);
    const double eq = tols.value("equality", 1e-6);
    const double rt = tols.value("round_trip", 1e-6);

    SignCheck z, gl, gu, cc;
    double zR = 0, glR = 0, guR = 0, ccR = 0;
    double grad_worst = 0.0, curv_worst = 0.0, len_worst = 0.0;
    for (std::size_t k = 0; k < R_grid.size(); ++k) {
        const double R = R_grid[k];
        const ModelProfile p = solve_annulus_profile(f, R, M, ptol);
        const SignReport signs = check_sign_lemmas(p);
        fold(z, zR, signs.z_pattern, R, k == 0);
        fold(gl, glR, signs.g_lower, R, k == 0);
        fold(gu, guR, signs.g_upper, R, k == 0);
        fold(cc, ccR, signs.concavity, R, k == 0);
        for (int branch : {1, 2}) {
            const ComparisonTriple t = make_triple(p, branch);
            // relative, less the rounding of heights r = cos s close to ±1
            for (const auto& g : verify_gradient_estimate(p, t).samples) {
                const double rounding = 8.0 * std::numeric_limits<double>::epsilon() / (1.0 - std::abs(std::cos(g.s)));
                grad_worst = std::max(grad_worst, std::abs(g.W - g.Wbar) / std::max(1.0, g.W) - rounding);
            }
            const CurvatureReport c = verify_curvature_estimates(p, t);
            curv_worst = std::max({curv_worst, std::abs(c.boundary_margin()), std::abs(c.max_curve_margin())});
            const LengthReport l = verify_length_estimate(p, t);
            len_worst = std::max(len_worst, std::abs(l.margin()));
            if (l.boundary_bound_applies) len_worst = std::max(len_worst, std::abs(l.boundary_bound_margin()));
        }
    }
    if (R_grid.empty()) return;
    s.add_sign("signs.z_pattern", z, zR);
    s.add_sign("signs.g_lower", gl, glR);
    s.add_sign("signs.g_upper", gu, guR);
    s.add_sign("signs.concavity", cc, ccR);
    s.add("model.gradient_equality", grad_worst <= eq, eq - grad_worst, {{"max_relative_difference", grad_worst}});
    s.add("model.curvature_equality", curv_worst <= eq, eq - curv_worst, {{"max_abs_margin", curv_worst}});
    s.add("model.length_equality", len_worst <= eq, eq - len_worst, {{"max_abs_margin", len_worst}});

    const TauCurve curve = build_tau_curve(f, M, R_grid, ptol);
    double step1 = std::numeric_limits<double>::infinity();
    double step2 = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < curve.grid.size(); ++k) {
        step1 = std::min(step1, curve.tau1[k - 1] - curve.tau1[k]);
        step2 = std::min(step2, curve.tau2[k] - curve.tau2[k - 1]);
    }
    s.add("tau.tau1_decreasing", curve.tau1_decreasing, step1);
    s.add("tau.tau2_increasing", curve.tau2_increasing, step2);

    double worst = 0.0;
    json failures = json::array();
    for (std::size_t k = 0; k < curve.grid.size(); ++k) {
        for (double tau : {curve.tau1[k], curve.tau2[k]}) {
            try {
                worst = std::max(worst, std::abs(expected_critical_height(curve, tau).R - curve.grid[k]));
            } catch (const Error& e) {
                failures.push_back({{"R", curve.grid[k]}, {"error", e.what()}});
            }
        }
    }
    s.add("tau.round_trip", worst <= rt && failures.empty(), rt - worst, {{"max_error", worst}, {"errors", failures}});
}

void pde_checks(Suite& s, const Nonlinearity& f, double M, const json& pde) {
    const ModelProfile model = solve_annulus_profile(f, 0.0, M);
    DomainSpec d;
    d.s1 = model.boundary(ZeroEnd::r2).pole_distance;
    d.s2 = std::numbers::pi - model.boundary(ZeroEnd::r1).pole_distance;
    d.n_s = d.n_theta = pde.value("n", std::size_t{64});
    d.inner = {pde.value("epsilon", 0.01), pde.value("mode", 3)};
    const double slack = pde.value("slack", 5e-3);
    const GridSolution u = solve_dirichlet(d, f, profile_guess(d, model), 1e-10);
    const Nonlinearity fe = effective_nonlinearity(u);
    const TauCurve curve = build_tau_curve(fe, u.peak_value());
    for (ZeroEnd side : {ZeroEnd::r2, ZeroEnd::r1}) {
        const std::size_t i = side == ZeroEnd::r2 ? 0 : d.n_s;
        double g2 = 0.0;
        for (std::size_t j = 0; j < d.n_theta; ++j) g2 = std::max(g2, u.grad_sq(i, j));
        const std::string tag = side == ZeroEnd::r2 ? "north" : "south";
        try {
            const ComparisonTriple t = associated_triple(curve, g2 / (curve.h * curve.h), side);
            const ComparisonReport g = verify_gradient_estimate(u, t, {.slack = slack});
            s.add("pde.gradient_estimate." + tag, g.pass, slack - g.max_violation, g);
            const CurvatureReport c = verify_curvature_estimates(u, t);
            s.add("pde.boundary_curvature." + tag, c.boundary_margin() >= 0.0, c.boundary_margin(), c);
            const LengthReport l = verify_length_estimate(u, t);
            s.add("pde.length_estimate." + tag, l.pass, l.margin(), l);
        } catch (const Error& e) {
            s.add("pde." + tag, false, -1.0, {{"error", e.what()}});
        }
    }
}

}  // namespace

VerifySummary verify_all(const json& user_config) {
    json config = default_verify_config();
    config.merge_patch(user_config);
    VerifySummary summary;
    summary.config_hash = config_hash(config);

    const bool ci = config["golden"].value("ci", false) || std::getenv("SPHERE_OEP_CI") != nullptr;
    const std::string golden_path = config["golden"].value("path", GoldenStore::default_path());
    const GoldenStore golden = GoldenStore::load(golden_path);
    if (ci && golden.empty()) throw Error("golden store " + golden_path + " is empty (CI mode)");

    const json& fs = config["nonlinearities"];
    if (fs.empty()) {
        summary.warnings.push_back("no nonlinearities configured; nothing was checked");
        return summary;
    }
    const auto Ms = config["M"].get<std::vector<double>>();
    const auto R_grid = config["R_grid"].get<std::vector<double>>();
    const json& tols = config["tolerances"];
    const json& pde = config["pde"];
    const std::size_t n_samples = config.value("condition_samples", std::size_t{1000});

    for (const auto& fj : fs) {
        const Nonlinearity f = nonlinearity_from_json(fj);
        const double M_top = Ms.empty() ? 1.0 : *std::max_element(Ms.begin(), Ms.end());
        Suite s{summary, f.descriptor() + " "};
        const ConditionReport cond = validate_conditions(f, M_top, n_samples);
        for (const auto& [name, ok] : {std::pair{"conditions.cond_i", cond.cond_i},
                                       std::pair{"conditions.cond_ii", cond.cond_ii},
                                       std::pair{"conditions.cond_nonneg", cond.cond_nonneg}}) {
            json detail = json::object();
            double margin = 0.0;
            if (!ok && cond.first_violation) {
                detail = {{"x", cond.first_violation->x}, {"lhs", cond.first_violation->lhs},
                          {"rhs", cond.first_violation->rhs}};
                margin = cond.first_violation->lhs - cond.first_violation->rhs;
            }
            s.add(name, ok, margin, detail);
        }
        if (!cond.all()) {
            summary.warnings.push_back(f.descriptor() + " violates the structural conditions; later checks skipped");
            continue;
        }
        for (double M : Ms) {
            std::ostringstream tag;
            tag << f.descriptor() << " M=" << M << ' ';
            Suite sm{summary, tag.str()};
            model_checks(sm, f, M, R_grid, tols);
            if (pde.value("enabled", true)) pde_checks(sm, f, M, pde);
        }
        for (const auto& [key, entry] : golden.entries()) {
            if (key.f != f.descriptor()) continue;
            const double got = measure_golden(key, tols.value("profile", 1e-12));
            const double err = std::abs(got - entry.value);
            std::ostringstream name;
            name << "golden." << key.quantity << "[M=" << key.M;
            if (key.R) name << ",R=" << *key.R;
            name << ']';
            s.add(name.str(), err <= entry.tolerance, entry.tolerance - err,
                  {{"value", got}, {"expected", entry.value}, {"oracle", entry.oracle}});
        }
    }
    return summary;
}

void to_json(json& j, const CheckResult& c) {
    j = {{"name", c.name}, {"pass", c.pass}, {"margin", c.margin}, {"detail", c.detail}};
}

void to_json(json& j, const VerifySummary& s) {
    j = {{"version", s.version},
         {"config_hash", s.config_hash},
         {"pass", s.all_pass()},
         {"exit_status", s.exit_status()},
         {"checks", s.checks},
         {"warnings", s.warnings}};
}

}  // namespace sphere_oep
