#include "wemsfem/study.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <istream>
#include <ostream>
#include <sstream>

#include "wemsfem/msfem.hpp"

namespace wemsfem {

namespace {

using Clock = std::chrono::steady_clock;

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text)
{
    T v{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError("config: bad value '" + text + "' for key '" + key + "'");
    return v;
}

double parse_double(const std::string& key, const std::string& text)
{
    // Accept fractions such as 1/128 for ε.
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
        const double num = parse_number<double>(key, trim(text.substr(0, slash)));
        const double den = parse_number<double>(key, trim(text.substr(slash + 1)));
        if (den == 0.0) throw ConfigError("config: zero denominator for key '" + key + "'");
        return num / den;
    }
    return parse_number<double>(key, text);
}

template <class T, class F>
std::vector<T> parse_list(const std::string& key, const std::string& text, F conv)
{
    std::vector<T> out;
    for (const auto& item : split_list(text)) out.push_back(conv(key, item));
    if (out.empty()) throw ConfigError("config: empty list for key '" + key + "'");
    return out;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

/// u_ref for one problem, computed once per (example, ε).
struct Reference {
    ProblemSpec spec;
    std::vector<double> u;
};

ErrorReport error_row(const std::string& example, int nc, int nf, std::optional<int> level, const std::string& method,
                      const std::string& what)
{
    ErrorReport r;
    r.example = example;
    r.nc = nc;
    r.nf = nf;
    r.level = level;
    r.method = method;
    std::string msg = what;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    r.status = "error: " + msg;
    return r;
}

void add_split(ErrorReport& rep, const ProblemSpec& spec, std::span<const double> u, std::span<const double> u_ref,
               const StructuredGrid& fine)
{
    const double pe = problem_peclet(spec);
    if (pe > 2.0 && layer_width(pe) < 1.0) {
        const auto split = layer_split(u, u_ref, fine, pe);
        rep.e_h1_in = split.e_h1_in;
        rep.e_h1_out = split.e_h1_out;
    }
}

/// All requested levels of WEMsFEM at one nc from a single build at the deepest level.
void run_wemsfem(const StudyConfig& cfg, const Reference& ref, int nc, const std::vector<int>& levels,
                 const std::function<void(ErrorReport)>& emit)
{
    const auto fine = unit_square_grid(cfg.nf);
    std::unique_ptr<MultiscaleSolver> solver;
    std::string build_error;
    try {
        const auto g = build_hierarchy(nc, cfg.nf);
        int top = 0;
        for (int l : levels) {
            if (l <= max_edge_level(g)) top = std::max(top, l);
        }
        MsOptions opts;
        opts.level = cfg.basis == EdgeBasisKind::hierarchical ? top : 0;
        opts.quad_order = cfg.quad_order;
        opts.basis = cfg.basis;
        opts.workers = cfg.workers;
        if (cfg.basis == EdgeBasisKind::hierarchical) solver = std::make_unique<MultiscaleSolver>(g, ref.spec.coeffs, opts);
    } catch (const std::exception& e) {
        build_error = e.what();
    }
    for (int l : levels) {
        try {
            if (!build_error.empty()) throw MultiscaleError(build_error);
            const auto g = solver ? solver->grid() : build_hierarchy(nc, cfg.nf);
            if (l < 0 || l > max_edge_level(g)) {
                throw LevelError("level " + std::to_string(l) + " exceeds max " + std::to_string(max_edge_level(g)) +
                                 " for nc = " + std::to_string(nc) + ", nf = " + std::to_string(cfg.nf));
            }
            MsSolution sol;
            if (solver) {
                sol = solver->solve(l);
            } else {
                MsOptions opts;
                opts.level = l;
                opts.quad_order = cfg.quad_order;
                opts.basis = cfg.basis;
                opts.workers = cfg.workers;
                sol = MultiscaleSolver(g, ref.spec.coeffs, opts).solve();
            }
            auto rep = error_report(sol.u_ms, ref.u, fine);
            add_split(rep, ref.spec, sol.u_ms, ref.u, fine);
            rep.example = ref.spec.id;
            rep.nc = nc;
            rep.nf = cfg.nf;
            rep.level = l;
            rep.method = "wemsfem";
            rep.pe = mesh_peclet(ref.spec, nc);
            rep.seconds = sol.seconds;
            emit(rep);
        } catch (const std::exception& e) {
            auto row = error_row(ref.spec.id, nc, cfg.nf, l, "wemsfem", e.what());
            row.pe = mesh_peclet(ref.spec, nc);
            emit(row);
        }
    }
}

void run_baseline(const StudyConfig& cfg, const Reference& ref, int nc, const std::string& method,
                  const std::function<void(ErrorReport)>& emit)
{
    try {
        if (nc < 1 || cfg.nf % nc != 0) throw GridError("nf = " + std::to_string(cfg.nf) + " is not a multiple of nc = " + std::to_string(nc));
        emit(method == "fem" ? fem_baseline(ref.spec, nc, ref.u, cfg.nf, cfg.baseline_quad_order)
                             : supg_baseline(ref.spec, nc, ref.u, cfg.nf, cfg.baseline_quad_order));
    } catch (const std::exception& e) {
        auto row = error_row(ref.spec.id, nc, cfg.nf, std::nullopt, method, e.what());
        row.pe = mesh_peclet(ref.spec, nc);
        emit(row);
    }
}

}  // namespace

StudyConfig StudyConfig::parse(std::istream& in)
{
    StudyConfig cfg;
    bool levels_given = false;
    bool nc_given = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto val = trim(line.substr(eq + 1));
        if (key == "mode") {
            if (val == "table") cfg.mode = StudyMode::table;
            else if (val == "pe-sweep") cfg.mode = StudyMode::pe_sweep;
            else if (val == "level-sweep") cfg.mode = StudyMode::level_sweep;
            else throw ConfigError("config: unknown mode '" + val + "' (table, pe-sweep, level-sweep)");
        } else if (key == "example" || key == "examples") {
            cfg.examples = split_list(val);
            for (const auto& id : cfg.examples) make_problem(id);
        } else if (key == "nc") {
            cfg.nc = parse_list<int>(key, val, parse_number<int>);
            nc_given = true;
        } else if (key == "level" || key == "levels") {
            cfg.levels = parse_list<int>(key, val, parse_number<int>);
            levels_given = true;
        } else if (key == "nf") {
            cfg.nf = parse_number<int>(key, val);
        } else if (key == "methods" || key == "method") {
            cfg.methods = split_list(val);
            for (const auto& m : cfg.methods) {
                if (m != "wemsfem" && m != "fem" && m != "supg") throw ConfigError("config: unknown method '" + m + "'");
            }
        } else if (key == "epsilons" || key == "epsilon") {
            cfg.epsilons = parse_list<double>(key, val, parse_double);
        } else if (key == "workers") {
            cfg.workers = parse_number<int>(key, val);
        } else if (key == "quad_order") {
            cfg.quad_order = parse_number<int>(key, val);
        } else if (key == "baseline_quad_order") {
            cfg.baseline_quad_order = parse_number<int>(key, val);
        } else if (key == "basis") {
            if (val == "hierarchical") cfg.basis = EdgeBasisKind::hierarchical;
            else if (val == "nodal") cfg.basis = EdgeBasisKind::nodal;
            else throw ConfigError("config: unknown basis '" + val + "'");
        } else if (key == "solver_tol") {
            cfg.routing.krylov.tol = parse_double(key, val);
        } else if (key == "solver_max_iter") {
            cfg.routing.krylov.max_iter = parse_number<int>(key, val);
        } else if (key == "solver_restart") {
            cfg.routing.krylov.restart = parse_number<int>(key, val);
        } else if (key == "direct_limit") {
            cfg.routing.direct_limit = parse_number<int>(key, val);
        } else if (key == "timings") {
            if (val != "on" && val != "off") throw ConfigError("config: timings must be on or off");
            cfg.timings = val == "on";
        } else if (key == "out") {
            cfg.out = val;
        } else {
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    if (cfg.mode == StudyMode::pe_sweep) {
        if (cfg.epsilons.empty()) throw ConfigError("config: pe-sweep needs epsilons");
        if (!nc_given) cfg.nc = {16};
        if (!levels_given) cfg.levels = {0};
    }
    if (cfg.mode == StudyMode::level_sweep) {
        if (!nc_given) cfg.nc = {16};
        if (!levels_given) cfg.levels = {0, 1, 2, 3};
    }
    if (cfg.nf < 2) throw ConfigError("config: nf must be at least 2");
    return cfg;
}

StudyConfig StudyConfig::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    return parse(in);
}

const char* csv_header() { return "example,nc,nf,level,method,Pe,e_L2,e_H1,e_H1_in,e_H1_out,seconds,status\n"; }

std::string csv_row(const ErrorReport& r)
{
    std::ostringstream os;
    os << r.example << ',' << r.nc << ',' << r.nf << ',' << (r.level ? std::to_string(*r.level) : std::string()) << ','
       << r.method << ',' << fmt(r.pe) << ',';
    const bool ok = r.status == "ok";
    os << (ok ? fmt(r.e_l2) : "") << ',' << (ok ? fmt(r.e_h1) : "") << ',';
    os << (r.e_h1_in ? fmt(*r.e_h1_in) : "") << ',' << (r.e_h1_out ? fmt(*r.e_h1_out) : "") << ',';
    os << fmt(r.seconds) << ',' << r.status << '\n';
    return os.str();
}

std::vector<ErrorReport> run_study(const StudyConfig& cfg, std::ostream* csv)
{
    std::vector<ErrorReport> rows;
    const auto emit = [&](ErrorReport r) {
        if (!cfg.timings) r.seconds = 0.0;
        if (csv) *csv << csv_row(r) << std::flush;
        rows.push_back(std::move(r));
    };
    if (csv) *csv << csv_header();

    std::vector<std::optional<double>> eps_list;
    if (cfg.mode == StudyMode::pe_sweep) {
        for (double e : cfg.epsilons) eps_list.emplace_back(e);
    } else {
        eps_list.emplace_back(std::nullopt);
    }

    for (const auto& id : cfg.examples) {
        for (const auto& eps : eps_list) {
            Reference ref;
            std::string ref_error;
            try {
                ref.spec = make_problem(id, eps);
                ref.u = reference_solution(ref.spec, cfg.nf, cfg.routing, cfg.quad_order);
            } catch (const std::exception& e) {
                ref_error = e.what();
            }
            for (int nc : cfg.nc) {
                for (const auto& m : cfg.methods) {
                    if (!ref_error.empty()) {
                        if (m == "wemsfem") {
                            for (int l : cfg.levels) emit(error_row(id, nc, cfg.nf, l, m, ref_error));
                        } else {
                            emit(error_row(id, nc, cfg.nf, std::nullopt, m, ref_error));
                        }
                        continue;
                    }
                    if (m == "wemsfem") {
                        run_wemsfem(cfg, ref, nc, cfg.levels, emit);
                    } else {
                        run_baseline(cfg, ref, nc, m, emit);
                    }
                }
            }
        }
    }
    return rows;
}

RunResult run_single(const RunRequest& req)
{
    if (req.method != "wemsfem" && req.method != "fem" && req.method != "supg") {
        throw ConfigError("unknown method '" + req.method + "'");
    }
    RunResult out;
    const auto spec = make_problem(req.example, req.epsilon);
    out.reference = reference_solution(spec, req.nf, req.routing, req.quad_order);
    const auto fine = unit_square_grid(req.nf);
    if (req.method == "wemsfem") {
        const auto g = build_hierarchy(req.nc, req.nf);
        MsOptions opts;
        opts.level = req.level;
        opts.quad_order = req.quad_order;
        opts.basis = req.basis;
        opts.workers = req.workers;
        auto sol = MultiscaleSolver(g, spec.coeffs, opts).solve();
        out.report = error_report(sol.u_ms, out.reference, fine);
        out.report.level = req.level;
        out.report.seconds = sol.seconds;
        out.field = std::move(sol.u_ms);
    } else {
        if (req.nf % req.nc != 0) throw GridError("nf must be a multiple of nc");
        const auto t0 = Clock::now();
        const auto coarse = req.method == "fem" ? fem_coarse_solution(spec, req.nc, req.baseline_quad_order)
                                                : supg_coarse_solution(spec, req.nc, req.baseline_quad_order);
        out.field = bilinear_prolongation(coarse, req.nc, req.nf);
        out.report = error_report(out.field, out.reference, fine);
        out.report.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    }
    add_split(out.report, spec, out.field, out.reference, fine);
    out.report.example = spec.id;
    out.report.nc = req.nc;
    out.report.nf = req.nf;
    out.report.method = req.method;
    out.report.pe = mesh_peclet(spec, req.nc);
    return out;
}

void write_field(std::ostream& os, const StructuredGrid& grid, const std::vector<double>& values)
{
    if (values.size() != static_cast<std::size_t>(grid.num_nodes())) throw DimensionError("write_field: length mismatch");
    char buf[96];
    for (int j = 0; j <= grid.ny; ++j) {
        for (int i = 0; i <= grid.nx; ++i) {
            std::snprintf(buf, sizeof buf, "%.6g %.6g %.10g\n", grid.x(i), grid.y(j), values[static_cast<std::size_t>(grid.node(i, j))]);
            os << buf;
        }
    }
}

}  // namespace wemsfem
