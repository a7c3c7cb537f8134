#include "cli.hpp"

#include "biot/analysis.hpp"
#include "biot/errors.hpp"
#include "biot/space.hpp"
#include "biot/timestep.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace biot::cli {

namespace {

const std::set<std::string> kPhysicalKeys{"mu", "lambda", "alpha", "K", "tau", "c_pp"};
const std::set<std::string> kReducedKeys{"lambda_red", "rp_inv", "alpha_p"};
const std::set<std::string> kRunKeys{"command", "n",       "n_list",      "triple",  "norms",    "eta",
                                     "tol",     "max_iter", "output_dir", "solver",  "rhs",      "steps",
                                     "source_g", "threads", "with_condition", "dump_matrices", "dump_mesh"};

Command command_from_string(const std::string& s) {
    if (s == "solve") return Command::Solve;
    if (s == "sweep") return Command::Sweep;
    if (s == "infsup") return Command::InfSup;
    if (s == "convergence") return Command::Convergence;
    if (s == "timestep") return Command::Timestep;
    throw ConfigError("unknown command '" + s + "'");
}

RhsKind rhs_from_string(const std::string& s) {
    if (s == "manufactured") return RhsKind::Manufactured;
    if (s == "zero") return RhsKind::Zero;
    throw ConfigError("rhs must be 'manufactured' or 'zero', got '" + s + "'");
}

bool parse_bool(const std::string& s, const std::string& what) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError(what + ": expected true/false, got '" + s + "'");
}

nlohmann::ordered_json physical_json(const PhysicalParams& p) {
    nlohmann::ordered_json j;
    j["mu"] = p.mu;
    j["lambda"] = p.lambda;
    j["alpha"] = p.alpha;
    j["K"] = p.K;
    j["tau"] = p.tau;
    j["c_pp"] = p.c_pp;
    return j;
}

ParamGrid grid_of(const RunConfig& cfg) {
    ParamGrid g;
    if (cfg.physical) {
        const ReducedParams r = reduce(*cfg.physical).params;
        g.lambda = {r.lambda()};
        g.rp_inv = {r.rp_inv()};
        g.alpha_p = {r.alpha_p()};
    } else {
        g.lambda = cfg.reduced->lambda;
        g.rp_inv = cfg.reduced->rp_inv;
        g.alpha_p = cfg.reduced->alpha_p;
    }
    return g;
}

ReducedParams single_point(const RunConfig& cfg) {
    const ParamGrid g = grid_of(cfg);
    if (g.lambda.size() != 1 || g.rp_inv.size() != 1 || g.alpha_p.size() != 1)
        throw ConfigError(std::string(to_string(cfg.command)) + " takes a single parameter point, not lists");
    return ReducedParams::make(g.lambda[0], g.rp_inv[0], g.alpha_p[0]);
}

void dump_matrix(const std::filesystem::path& path, const CsrMatrix& m) {
    std::ostringstream os;
    m.write_matrix_market(os);
    write_text(path, os.str());
}

void dump_system(const RunConfig& cfg, const Discretization& d, const BlockSystem& sys) {
    if (cfg.dump_matrices) {
        const auto& dir = cfg.output_dir;
        dump_matrix(dir / "A_uu.mtx", sys.A_uu);
        dump_matrix(dir / "B_up.mtx", sys.B_up);
        dump_matrix(dir / "A_vv.mtx", sys.A_vv);
        dump_matrix(dir / "B_vp.mtx", sys.B_vp);
        dump_matrix(dir / "C_pp.mtx", sys.C_pp);
        dump_matrix(dir / "A.mtx", sys.monolithic());
    }
    if (cfg.dump_mesh) {
        std::ostringstream os;
        d.mesh().dump(os);
        write_text(cfg.output_dir / "mesh.txt", os.str());
    }
}

void write_fields(const std::filesystem::path& path, const FieldTriple& t) {
    nlohmann::ordered_json j;
    j["u"] = t.u;
    j["v"] = t.v;
    j["p"] = t.p;
    write_json(path, j);
}

bool run_solve(const RunConfig& cfg, std::ostream& log) {
    const ReducedParams params = single_point(cfg);
    const DGConfig dg{cfg.eta};
    const Discretization d = Discretization::structured(cfg.mesh_n, Families::parse(cfg.triple));
    const ManufacturedCase mc = manufactured_case(params);
    const bool manufactured = cfg.rhs == RhsKind::Manufactured;
    const BlockSystem sys =
        assemble_block_system(d, params, dg, manufactured ? &mc.f : nullptr, manufactured ? &mc.g : nullptr);
    dump_system(cfg, d, sys);

    const bool direct = cfg.solver == "direct";
    std::optional<BlockPreconditioner> B;
    if (!direct || cfg.with_condition) B = BlockPreconditioner::build(assemble_norms(d, params, dg), sys);
    SolveResult sol = direct ? direct_solve(sys) : minres_solve(sys, *B, MinresOptions{cfg.tol, cfg.max_iter});
    if (cfg.with_condition) sol.report.cond_estimate = estimate_condition(sys, *B);
    const std::vector<double> g_cells =
        manufactured ? project_Qh(mc.g, d.mesh()) : std::vector<double>(d.mesh().num_cells(), 0.0);
    sol.report.conservation_max = conservation_audit(d, sol.x, g_cells, params).max_abs;

    write_text(cfg.output_dir / "report.json", sol.report.to_json() + "\n");
    write_residual_history_csv(cfg.output_dir / "residuals.csv", sol.report);
    write_fields(cfg.output_dir / "solution.json", split_solution(d, sol.x));
    if (manufactured) {
        const ErrorNorms e = error_norms(d, sol.x, mc);
        nlohmann::ordered_json j;
        j["err_U"] = e.err_U;
        j["err_V"] = e.err_V;
        j["err_P"] = e.err_P;
        write_json(cfg.output_dir / "errors.json", j);
    }
    log << "solve: " << to_string(sol.report.status) << " after " << sol.report.iterations
        << " iterations, conservation " << fmt17(*sol.report.conservation_max) << '\n';
    return sol.report.converged;
}

void run_sweep(const RunConfig& cfg, std::ostream& log) {
    const auto rows = minres_sweep(cfg.mesh_n, grid_of(cfg), Families::parse(cfg.triple), DGConfig{cfg.eta},
                                   MinresOptions{cfg.tol, cfg.max_iter}, cfg.with_condition, cfg.threads);
    write_minres_csv(cfg.output_dir / "minres.csv", rows);
    int lo = rows.front().iters, hi = lo;
    for (const MinresRow& r : rows) {
        lo = std::min(lo, r.iters);
        hi = std::max(hi, r.iters);
    }
    log << "sweep: " << rows.size() << " points, iterations " << lo << ".." << hi << '\n';
}

void run_infsup(const RunConfig& cfg, std::ostream& log) {
    const std::vector<int> ns = cfg.n_list.empty() ? std::vector<int>{cfg.mesh_n} : cfg.n_list;
    const auto rows =
        infsup_sweep(ns, grid_of(cfg), Families::parse(cfg.triple), DGConfig{cfg.eta}, cfg.norms, cfg.threads);
    write_infsup_csv(cfg.output_dir / "infsup.csv", rows);
    double lo = rows.front().beta0, hi = lo;
    for (const InfSupRow& r : rows) {
        lo = std::min(lo, r.beta0);
        hi = std::max(hi, r.beta0);
    }
    log << "infsup: " << rows.size() << " points, beta0 in [" << fmt17(lo) << ", " << fmt17(hi) << "]\n";
}

void run_convergence(const RunConfig& cfg, std::ostream& log) {
    const std::vector<int> ns = cfg.n_list.empty() ? std::vector<int>{4, 8, 16} : cfg.n_list;
    const ConvergenceTable table =
        convergence_study(single_point(cfg), ns, Families::parse(cfg.triple), DGConfig{cfg.eta});
    write_convergence_csv(cfg.output_dir / "convergence.csv", table);
    const ConvergenceRow& last = table.back();
    log << "convergence: " << table.size() << " meshes";
    if (last.order_U)
        log << ", finest orders " << fmt17(*last.order_U) << ' ' << fmt17(*last.order_V) << ' '
            << fmt17(*last.order_P);
    log << '\n';
}

void run_timestep(const RunConfig& cfg, std::ostream& log) {
    if (!cfg.physical) throw ConfigError("timestep needs physical parameters (mu, lambda, alpha, K, tau, c_pp)");
    const Discretization d = Discretization::structured(cfg.mesh_n, Families::parse(cfg.triple));
    TimestepOptions opt;
    opt.n_steps = cfg.steps;
    opt.use_minres = cfg.solver != "direct";
    opt.minres = MinresOptions{cfg.tol, cfg.max_iter};
    const std::vector<double> g(d.mesh().num_cells(), cfg.source_g);
    const TimestepResult res = timestep_drive(d, *cfg.physical, DGConfig{cfg.eta}, opt, nullptr, g,
                                              TimeStepState::zero(d, cfg.physical->tau));

    nlohmann::ordered_json reports = nlohmann::ordered_json::array();
    std::vector<std::vector<std::string>> rows;
    for (const StepRecord& s : res.steps) {
        nlohmann::ordered_json j;
        j["step"] = s.step;
        j["report"] = nlohmann::ordered_json::parse(s.report.to_json());
        reports.push_back(std::move(j));
        rows.push_back({std::to_string(s.step), std::to_string(s.report.iterations), fmt17(s.conservation_max)});
    }
    write_json(cfg.output_dir / "timestep_reports.json", reports);
    write_csv(cfg.output_dir / "timestep.csv", {"step", "iters", "conservation_max"}, rows);
    write_fields(cfg.output_dir / "final_state.json",
                 FieldTriple{res.final_state.u_prev, res.v_final, res.final_state.p_prev});
    log << "timestep: " << res.steps.size() << " steps\n";
}

} // namespace

std::string_view to_string(Command c) {
    switch (c) {
    case Command::Solve: return "solve";
    case Command::Sweep: return "sweep";
    case Command::InfSup: return "infsup";
    case Command::Convergence: return "convergence";
    case Command::Timestep: return "timestep";
    }
    return "?";
}

void RunConfig::validate() const {
    if (physical.has_value() == reduced.has_value())
        throw ConfigError("exactly one of the physical or reduced parameter sets must be given");
    if (norms == NormKind::Natural && command != Command::InfSup)
        throw ConfigError("norms=natural is only valid with infsup");
    if (mesh_n < 1) throw ConfigError("n must be >= 1");
    for (int n : n_list)
        if (n < 1) throw ConfigError("n_list entries must be >= 1");
    if (!(tol > 0.0)) throw ConfigError("tol must be > 0");
    if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
    if (steps < 0) throw ConfigError("steps must be >= 0");
    if (threads < 0) throw ConfigError("threads must be >= 0");
    if (solver != "minres" && solver != "direct") throw ConfigError("solver must be 'minres' or 'direct'");
    DGConfig{eta}.validate();
    check_compatibility(Families::parse(triple));
    if (physical) {
        physical->validate();
    } else {
        if (reduced->lambda.empty() || reduced->rp_inv.empty() || reduced->alpha_p.empty())
            throw ConfigError("reduced parameter lists must be non-empty");
        for (double l : reduced->lambda)
            for (double r : reduced->rp_inv)
                for (double a : reduced->alpha_p) ReducedParams::make(l, r, a);
    }
}

nlohmann::ordered_json RunConfig::to_json() const {
    nlohmann::ordered_json j;
    j["command"] = std::string(to_string(command));
    j["n"] = mesh_n;
    j["n_list"] = n_list;
    j["triple"] = triple;
    j["norms"] = std::string(biot::to_string(norms));
    if (physical) {
        j["physical"] = physical_json(*physical);
        const ReducedParams r = reduce(*physical).params;
        j["reduced"] = {{"lambda_red", {r.lambda()}}, {"rp_inv", {r.rp_inv()}}, {"alpha_p", {r.alpha_p()}}};
    } else {
        j["physical"] = nullptr;
        j["reduced"] = {{"lambda_red", reduced->lambda}, {"rp_inv", reduced->rp_inv}, {"alpha_p", reduced->alpha_p}};
    }
    j["eta"] = eta;
    j["tol"] = tol;
    j["max_iter"] = max_iter;
    j["output_dir"] = output_dir.string();
    j["solver"] = solver;
    j["rhs"] = rhs == RhsKind::Manufactured ? "manufactured" : "zero";
    j["with_condition"] = with_condition;
    j["steps"] = steps;
    j["source_g"] = source_g;
    j["threads"] = threads;
    j["dump_matrices"] = dump_matrices;
    j["dump_mesh"] = dump_mesh;
    return j;
}

void apply_config_file(const FlatConfig& file, RunConfig& cfg) {
    bool any_physical = false, any_reduced = false;
    for (const auto& [key, _] : file) {
        if (kPhysicalKeys.count(key)) any_physical = true;
        else if (kReducedKeys.count(key)) any_reduced = true;
        else if (!kRunKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    if (any_physical && any_reduced) throw ConfigError("config mixes physical and reduced parameters");

    auto get = [&file](const std::string& k) -> const std::string* {
        const auto it = file.find(k);
        return it == file.end() ? nullptr : &it->second;
    };
    if (any_physical) {
        PhysicalParams p;
        if (auto v = get("mu")) p.mu = parse_double(*v, "mu");
        if (auto v = get("lambda")) p.lambda = parse_double(*v, "lambda");
        if (auto v = get("alpha")) p.alpha = parse_double(*v, "alpha");
        if (auto v = get("K")) p.K = parse_double(*v, "K");
        if (auto v = get("tau")) p.tau = parse_double(*v, "tau");
        if (auto v = get("c_pp")) p.c_pp = parse_double(*v, "c_pp");
        cfg.physical = p;
        cfg.reduced.reset();
    }
    if (any_reduced) {
        ReducedLists r;
        if (auto v = get("lambda_red")) r.lambda = parse_double_list(*v, "lambda_red");
        if (auto v = get("rp_inv")) r.rp_inv = parse_double_list(*v, "rp_inv");
        if (auto v = get("alpha_p")) r.alpha_p = parse_double_list(*v, "alpha_p");
        cfg.reduced = r;
        cfg.physical.reset();
    }
    if (auto v = get("command")) cfg.command = command_from_string(*v);
    if (auto v = get("n")) cfg.mesh_n = parse_int(*v, "n");
    if (auto v = get("n_list")) cfg.n_list = parse_int_list(*v, "n_list");
    if (auto v = get("triple")) cfg.triple = *v;
    if (auto v = get("norms")) cfg.norms = norm_kind_from_string(*v);
    if (auto v = get("eta")) cfg.eta = parse_double(*v, "eta");
    if (auto v = get("tol")) cfg.tol = parse_double(*v, "tol");
    if (auto v = get("max_iter")) cfg.max_iter = parse_int(*v, "max_iter");
    if (auto v = get("output_dir")) cfg.output_dir = *v;
    if (auto v = get("solver")) cfg.solver = *v;
    if (auto v = get("rhs")) cfg.rhs = rhs_from_string(*v);
    if (auto v = get("steps")) cfg.steps = parse_int(*v, "steps");
    if (auto v = get("source_g")) cfg.source_g = parse_double(*v, "source_g");
    if (auto v = get("threads")) cfg.threads = parse_int(*v, "threads");
    if (auto v = get("with_condition")) cfg.with_condition = parse_bool(*v, "with_condition");
    if (auto v = get("dump_matrices")) cfg.dump_matrices = parse_bool(*v, "dump_matrices");
    if (auto v = get("dump_mesh")) cfg.dump_mesh = parse_bool(*v, "dump_mesh");
}

bool run(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    std::filesystem::create_directories(cfg.output_dir);
    write_json(cfg.output_dir / "config.json", cfg.to_json());
    switch (cfg.command) {
    case Command::Solve: return run_solve(cfg, log);
    case Command::Sweep: run_sweep(cfg, log); break;
    case Command::InfSup: run_infsup(cfg, log); break;
    case Command::Convergence: run_convergence(cfg, log); break;
    case Command::Timestep: run_timestep(cfg, log); break;
    }
    return true;
}

namespace {

// Raw flag values; empty means "not given on the command line".
struct Flags {
    std::string config, n, n_list, triple, norms, eta, tol, max_iter, out, solver, rhs, steps, source_g, threads;
    std::string lambda, rp_inv, alpha_p;
    std::string mu, lame, alpha, K, tau, c_pp;
    bool with_condition = false, dump_matrices = false, dump_mesh = false;
};

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "flat key = value config file");
    sub->add_option("--n", f.n, "structured mesh size");
    sub->add_option("--triple", f.triple, "element triple, e.g. bdm1-rt0-p0");
    sub->add_option("--eta", f.eta, "interior penalty parameter");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--threads", f.threads, "worker threads (0 = hardware)");
    sub->add_option("--lambda", f.lambda, "reduced Lame parameter (list allowed for sweeps)");
    sub->add_option("--rp-inv", f.rp_inv, "reduced inverse permeability (list allowed for sweeps)");
    sub->add_option("--alpha-p", f.alpha_p, "reduced storage coefficient (list allowed for sweeps)");
    sub->add_option("--mu", f.mu, "physical shear modulus");
    sub->add_option("--lame", f.lame, "physical Lame parameter");
    sub->add_option("--alpha", f.alpha, "Biot-Willis constant");
    sub->add_option("--K", f.K, "hydraulic conductivity");
    sub->add_option("--tau", f.tau, "time-step length");
    sub->add_option("--c-pp", f.c_pp, "storage coefficient");
}

void add_solver(CLI::App* sub, Flags& f) {
    sub->add_option("--tol", f.tol, "MINRES relative tolerance");
    sub->add_option("--max-iter", f.max_iter, "MINRES iteration cap");
}

// Builds the resolved config: file first, then command-line flags on top.
RunConfig resolve(Command cmd, const Flags& f) {
    FlatConfig merged;
    if (!f.config.empty()) merged = read_flat_config(f.config);
    const bool flag_physical = !(f.mu + f.lame + f.alpha + f.K + f.tau + f.c_pp).empty();
    const bool flag_reduced = !(f.lambda + f.rp_inv + f.alpha_p).empty();
    if (flag_physical && flag_reduced) throw ConfigError("give either physical or reduced parameters, not both");
    if (flag_physical || flag_reduced) {
        // Command-line parameters replace any set from the file.
        for (const auto& k : kPhysicalKeys) merged.erase(k);
        for (const auto& k : kReducedKeys) merged.erase(k);
    }
    auto put = [&merged](const std::string& key, const std::string& v) {
        if (!v.empty()) merged[key] = v;
    };
    put("n", f.n);
    put("n_list", f.n_list);
    put("triple", f.triple);
    put("norms", f.norms);
    put("eta", f.eta);
    put("tol", f.tol);
    put("max_iter", f.max_iter);
    put("output_dir", f.out);
    put("solver", f.solver);
    put("rhs", f.rhs);
    put("steps", f.steps);
    put("source_g", f.source_g);
    put("threads", f.threads);
    put("lambda_red", f.lambda);
    put("rp_inv", f.rp_inv);
    put("alpha_p", f.alpha_p);
    put("mu", f.mu);
    put("lambda", f.lame);
    put("alpha", f.alpha);
    put("K", f.K);
    put("tau", f.tau);
    put("c_pp", f.c_pp);
    if (f.with_condition) merged["with_condition"] = "true";
    if (f.dump_matrices) merged["dump_matrices"] = "true";
    if (f.dump_mesh) merged["dump_mesh"] = "true";
    merged.erase("command");

    RunConfig cfg;
    cfg.command = cmd;
    apply_config_file(merged, cfg);
    if (!cfg.physical && !cfg.reduced) cfg.reduced = ReducedLists{};
    return cfg;
}

void print_error(std::ostream& err, const std::string& kind, const std::string& message) {
    nlohmann::ordered_json j;
    j["error"] = kind;
    j["message"] = message;
    err << j.dump() << '\n';
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Three-field Biot solver and robustness studies"};
    app.require_subcommand(1);
    Flags f;

    auto* solve = app.add_subcommand("solve", "single static solve");
    add_common(solve, f);
    add_solver(solve, f);
    solve->add_option("--solver", f.solver, "minres or direct");
    solve->add_option("--rhs", f.rhs, "manufactured or zero");
    solve->add_flag("--with-condition", f.with_condition, "estimate the preconditioned condition number");
    solve->add_flag("--dump-matrices", f.dump_matrices, "write blocks in Matrix Market format");
    solve->add_flag("--dump-mesh", f.dump_mesh, "write the mesh listing");

    auto* sweep = app.add_subcommand("sweep", "MINRES iteration counts over a parameter grid");
    add_common(sweep, f);
    add_solver(sweep, f);
    sweep->add_flag("--with-condition", f.with_condition, "also estimate condition numbers");

    auto* infsup = app.add_subcommand("infsup", "discrete inf-sup constants over a parameter grid");
    add_common(infsup, f);
    infsup->add_option("--n-list", f.n_list, "comma-separated mesh sizes");
    infsup->add_option("--norms", f.norms, "paper or natural");

    auto* conv = app.add_subcommand("convergence", "manufactured-solution convergence table");
    add_common(conv, f);
    conv->add_option("--n-list", f.n_list, "comma-separated, strictly increasing mesh sizes");

    auto* ts = app.add_subcommand("timestep", "backward-Euler time stepping with physical parameters");
    add_common(ts, f);
    add_solver(ts, f);
    ts->add_option("--solver", f.solver, "minres or direct");
    ts->add_option("--steps", f.steps, "number of time steps");
    ts->add_option("--source-g", f.source_g, "constant pressure source");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        print_error(err, "ConfigError", e.what());
        return 2;
    }

    try {
        Command cmd = Command::Solve;
        if (sweep->parsed()) cmd = Command::Sweep;
        else if (infsup->parsed()) cmd = Command::InfSup;
        else if (conv->parsed()) cmd = Command::Convergence;
        else if (ts->parsed()) cmd = Command::Timestep;
        if (!run(resolve(cmd, f), out)) {
            print_error(err, "NotConverged", "MINRES stopped before reaching the tolerance; see report.json");
            return 3;
        }
    } catch (const ConfigError& e) {
        print_error(err, e.kind(), e.what());
        return 2;
    } catch (const Error& e) {
        print_error(err, e.kind(), e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error(err, "InternalError", e.what());
        return 1;
    }
    return 0;
}

} // namespace biot::cli
