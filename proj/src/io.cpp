#include "contractsolve/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "contractsolve/fbp.hpp"
#include "contractsolve/multiplier.hpp"
#include "contractsolve/numerics.hpp"
#include "contractsolve/oracle.hpp"
#include "contractsolve/recovery.hpp"
#include "contractsolve/transform.hpp"

namespace contractsolve {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct FlatConfig {
    std::map<std::string, json> kv;

    bool has(const std::string& key) const { return kv.count(key) != 0; }

    const json& at(const std::string& key) const {
        auto it = kv.find(key);
        if (it == kv.end()) throw ValidationError("config: missing key '" + key + "'");
        return it->second;
    }

    double num(const std::string& key) const {
        const json& j = at(key);
        if (!j.is_number()) throw ParseError("config: '" + key + "' must be a number");
        return j.get<double>();
    }

    std::string str(const std::string& key) const {
        const json& j = at(key);
        if (!j.is_string()) throw ParseError("config: '" + key + "' must be a string");
        return j.get<std::string>();
    }

    std::vector<double> arr(const std::string& key) const {
        const json& j = at(key);
        if (!j.is_array()) throw ParseError("config: '" + key + "' must be an array");
        std::vector<double> out;
        out.reserve(j.size());
        for (const auto& e : j) {
            if (!e.is_number()) throw ParseError("config: '" + key + "' must hold numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }
};

RunMode parse_mode(const std::string& s) {
    if (s == "solve") return RunMode::Solve;
    if (s == "feasibility") return RunMode::Feasibility;
    if (s == "oracle-check") return RunMode::OracleCheck;
    if (s == "envelope") return RunMode::Envelope;
    if (s == "sweep") return RunMode::Sweep;
    throw ParseError("config: unknown mode '" + s + "'");
}

UtilitySpec build_utility(const FlatConfig& fc) {
    const std::string kind = fc.str("problem.utility.kind");
    if (kind == "cara") return UtilitySpec::cara(fc.num("problem.utility.alpha"));
    if (kind == "crra") return UtilitySpec::crra(fc.num("problem.utility.gamma"));
    if (kind == "log") return UtilitySpec::log_utility();
    if (kind == "tabulated")
        return UtilitySpec::tabulated(fc.arr("problem.utility.x"), fc.arr("problem.utility.u"));
    throw ParseError("config: unknown utility kind '" + kind + "'");
}

WeightingSpec build_weighting(const FlatConfig& fc) {
    if (!fc.has("problem.weighting.kind")) return WeightingSpec::identity();
    const std::string kind = fc.str("problem.weighting.kind");
    if (kind == "identity") return WeightingSpec::identity();
    if (kind == "power") return WeightingSpec::power(fc.num("problem.weighting.gamma"));
    if (kind == "prelec")
        return WeightingSpec::prelec(fc.num("problem.weighting.a"), fc.num("problem.weighting.b"));
    if (kind == "tk") return WeightingSpec::tversky_kahneman(fc.num("problem.weighting.gamma"));
    throw ParseError("config: unknown weighting kind '" + kind + "'");
}

LossModel build_loss(const FlatConfig& fc) {
    const std::string kind = fc.str("problem.loss.kind");
    if (kind == "uniform") return LossModel::uniform(fc.num("problem.loss.b"));
    if (kind == "mass_at_zero_plus_uniform")
        return LossModel::mass_at_zero_plus_uniform(fc.num("problem.loss.q"),
                                                    fc.num("problem.loss.b"));
    if (kind == "tabulated_quantile")
        return LossModel::tabulated_quantile(fc.arr("problem.loss.p"), fc.arr("problem.loss.x"));
    throw ParseError("config: unknown loss kind '" + kind + "'");
}

PhiSpec build_phi(const FlatConfig& fc) {
    if (!fc.has("problem.phi.kind")) return PhiSpec::constant(1.0);
    const std::string kind = fc.str("problem.phi.kind");
    if (kind == "constant")
        return PhiSpec::constant(fc.has("problem.phi.c") ? fc.num("problem.phi.c") : 1.0);
    if (kind == "power") return PhiSpec::power(fc.num("problem.phi.c"), fc.num("problem.phi.k"));
    if (kind == "tabulated")
        return PhiSpec::tabulated(fc.arr("problem.phi.t"), fc.arr("problem.phi.v"));
    throw ParseError("config: unknown phi kind '" + kind + "'");
}

const char* feas_name(Feasibility f) {
    switch (f) {
    case Feasibility::Infeasible: return "infeasible";
    case Feasibility::UniqueSolution: return "unique";
    case Feasibility::Feasible: return "feasible";
    }
    return "?";
}

const char* branch_name(Branch b) { return b == Branch::Ode ? "ODE" : "OBST"; }

void write_quantile_csv(const std::filesystem::path& path, const TransformedProblem& tp,
                        const FbpSolution& sol) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << "p,delta,delta_prime,Q,branch,hbar,phi_tilde\n";
    for (std::size_t i = 0; i < tp.grid.n(); ++i)
        os << fmt(tp.grid.p[i]) << ',' << fmt(sol.delta[i]) << ',' << fmt(sol.delta_prime[i])
           << ',' << fmt(sol.quantile[i]) << ',' << branch_name(sol.branch[i]) << ','
           << fmt(tp.hbar[i]) << ',' << fmt(tp.phi_tilde[i]) << '\n';
}

void write_contract_csv(const std::filesystem::path& path, const Contract& ct) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << "x,R,I\n";
    for (std::size_t j = 0; j < ct.x.size(); ++j)
        os << fmt(ct.x[j]) << ',' << fmt(ct.retention[j]) << ',' << fmt(ct.indemnity[j]) << '\n';
}

// Synthetic solution record for the knife-edge budget case: the feasible set
// is the single quantile Q*, delta integrates u'(Q*).
FbpSolution solution_from_quantile(const TransformedProblem& tp,
                                   const std::vector<double>& Q) {
    FbpSolution sol;
    sol.lambda = std::numeric_limits<double>::quiet_NaN();
    const std::size_t n = tp.grid.n();
    sol.quantile = Q;
    sol.delta_prime.resize(n);
    for (std::size_t i = 0; i < n; ++i) sol.delta_prime[i] = tp.utility.marginal(Q[i]);
    sol.delta.resize(n);
    sol.delta[0] = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
        sol.delta[i + 1] =
            sol.delta[i] + 0.5 * (sol.delta_prime[i] + sol.delta_prime[i + 1]) * tp.grid.dp;
    sol.branch.assign(n, Branch::Ode);
    return sol;
}

int finish_solution(const RunConfig& cfg, const TransformedProblem& tp,
                    const Classification& cls, const FbpSolution& sol, double budget,
                    const char* how, std::ostream& log) {
    const std::filesystem::path out(cfg.out_dir);
    std::filesystem::create_directories(out);

    write_quantile_csv(out / "quantile.csv", tp, sol);

    const std::vector<double> G = recover_quantile(sol, cfg.problem.weighting, tp.grid);
    const Contract ct = recover_contract(G, tp.grid, cfg.problem.loss, tp.beta);
    write_contract_csv(out / "contract.csv", ct);

    const double value = rdut_value(G, tp.grid, cfg.problem.utility, cfg.problem.weighting);
    const ResidualReport rr = residual_check(sol, tp);

    std::ofstream sm(out / "summary.txt");
    if (!sm) throw IoError("cannot write " + (out / "summary.txt").string());
    sm << "mode = solve\n"
       << "grid_n = " << tp.grid.n() << "\n"
       << "status = " << feas_name(cls.status) << "\n"
       << "threshold = " << fmt(cls.threshold) << "\n"
       << "varpi = " << fmt(tp.varpi) << "\n"
       << "multiplier = " << (std::isnan(sol.lambda) ? std::string("none") : fmt(sol.lambda))
       << "\n"
       << "multiplier_source = " << how << "\n"
       << "budget = " << fmt(budget) << "\n"
       << "residual = " << fmt(rr.max_complementarity) << "\n"
       << "product_residual = " << fmt(rr.max_product) << "\n"
       << "sweeps = " << sol.sweeps << "\n"
       << "rdut = " << fmt(value) << "\n"
       << "premium = " << fmt(ct.premium) << "\n"
       << "increment_clip = " << fmt(ct.max_increment_clip) << "\n"
       << "ic_violations = " << ct.ic.violations << "\n";

    log << "solve: status=" << feas_name(cls.status) << " lambda="
        << (std::isnan(sol.lambda) ? std::string("none") : fmt(sol.lambda))
        << " budget=" << fmt(budget) << " residual=" << fmt(rr.max_complementarity) << "\n";
    return 0;
}

int run_solve(const RunConfig& cfg, std::ostream& log) {
    const Grid grid = Grid::uniform(cfg.grid_n);
    const TransformedProblem tp = transform_problem(cfg.problem, grid);
    const Classification cls = feasibility_classify(tp);

    if (cls.status == Feasibility::Infeasible) {
        log << "solve: infeasible (varpi=" << fmt(tp.varpi) << " < threshold="
            << fmt(cls.threshold) << ")\n";
        return 2;
    }
    if (cls.status == Feasibility::UniqueSolution) {
        const FbpSolution sol = solution_from_quantile(tp, cls.unique_solution);
        return finish_solution(cfg, tp, cls, sol, budget_of(sol, tp), "knife-edge", log);
    }

    if (cfg.lambda_override) {
        try {
            const FbpSolution sol = solve_fbp(tp, *cfg.lambda_override);
            return finish_solution(cfg, tp, cls, sol, budget_of(sol, tp), "fixed", log);
        } catch (const MultiplierTooSmall& e) {
            log << "solve: " << e.what() << "\n";
            return 3;
        } catch (const NoConvergence& e) {
            log << "solve: " << e.what() << "\n";
            return 3;
        }
    }

    CalibrationResult cal;
    try {
        cal = calibrate_lambda(tp);
    } catch (const BracketError& e) {
        log << "solve: " << e.what() << "\n";
        return 3;
    } catch (const NoConvergence& e) {
        log << "solve: " << e.what() << "\n";
        return 3;
    }
    if (!cal.budget_matched) {
        log << "solve: no multiplier matches the budget (nearest " << fmt(cal.budget)
            << " vs varpi " << fmt(tp.varpi) << "); the target lies outside the attainable range\n";
        return 2;
    }
    return finish_solution(cfg, tp, cls, cal.solution, cal.budget, "calibrated", log);
}

int run_feasibility(const RunConfig& cfg, std::ostream& log) {
    const Grid grid = Grid::uniform(cfg.grid_n);
    const TransformedProblem tp = transform_problem(cfg.problem, grid);
    const Classification cls = feasibility_classify(tp);
    log << "feasibility: status=" << feas_name(cls.status) << " threshold="
        << fmt(cls.threshold) << " varpi=" << fmt(tp.varpi) << "\n";
    return cls.status == Feasibility::Infeasible ? 2 : 0;
}

int run_oracle_check(const RunConfig& cfg, std::ostream& log) {
    const Grid grid = Grid::uniform(cfg.grid_n);
    const TransformedProblem tp = transform_problem(cfg.problem, grid);
    const double lambda = cfg.lambda_override.value_or(1.0);

    FbpSolution sol;
    try {
        sol = solve_fbp(tp, lambda);
    } catch (const MultiplierTooSmall& e) {
        log << "oracle-check: " << e.what() << "\n";
        return 3;
    } catch (const NoConvergence& e) {
        log << "oracle-check: " << e.what() << "\n";
        return 3;
    }
    const OracleResult orc = oracle_projected(tp, lambda);
    const Comparison cmp = compare(sol.quantile, orc.quantile);
    log << "oracle-check: sup=" << fmt(cmp.sup) << " mean=" << fmt(cmp.mean)
        << " objective=" << fmt(orc.objective) << " evaluations=" << orc.evaluations << "\n";
    return 0;
}

int run_envelope(const RunConfig& cfg, std::ostream& log) {
    std::vector<double> f = cfg.envelope_values;
    if (f.empty()) {
        if (!cfg.have_problem)
            throw ParseError("envelope: need envelope.values or a problem block");
        const Grid grid = Grid::uniform(cfg.grid_n);
        const TransformedProblem tp = transform_problem(cfg.problem, grid);
        f = tp.phi_tilde;
    }
    const Grid grid = Grid::uniform(f.size());
    const std::vector<double> env = concave_envelope(f, grid);
    const std::vector<double> env2 = concave_envelope(env, grid);

    double lift = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) lift = std::max(lift, env[i] - f[i]);
    const bool idem = env == env2;

    const std::filesystem::path out(cfg.out_dir);
    std::filesystem::create_directories(out);
    std::ofstream os(out / "envelope.csv");
    if (!os) throw IoError("cannot write envelope.csv");
    os << "p,f,envelope\n";
    for (std::size_t i = 0; i < f.size(); ++i)
        os << fmt(grid.p[i]) << ',' << fmt(f[i]) << ',' << fmt(env[i]) << '\n';

    log << "envelope: n=" << f.size() << " max_lift=" << fmt(lift)
        << " idempotent=" << (idem ? "true" : "false") << "\n";
    return idem ? 0 : 3;
}

int run_sweep(const RunConfig& cfg, std::ostream& log) {
    const Grid grid = Grid::uniform(cfg.grid_n);
    const TransformedProblem tp = transform_problem(cfg.problem, grid);

    std::vector<double> lambdas = cfg.sweep_lambdas;
    if (lambdas.empty())
        for (int k = -4; k <= 4; ++k) lambdas.push_back(std::ldexp(1.0, k));

    const std::filesystem::path out(cfg.out_dir);
    std::filesystem::create_directories(out);
    std::ofstream os(out / "sweep.csv");
    if (!os) throw IoError("cannot write sweep.csv");
    os << "lambda,budget,residual,sweeps,status\n";

    for (double lam : lambdas) {
        try {
            const FbpSolution sol = solve_fbp(tp, lam);
            os << fmt(lam) << ',' << fmt(budget_of(sol, tp)) << ',' << fmt(sol.residual) << ','
               << sol.sweeps << ",ok\n";
        } catch (const MultiplierTooSmall&) {
            os << fmt(lam) << ",nan,nan,0,multiplier_too_small\n";
        } catch (const NoConvergence&) {
            os << fmt(lam) << ",nan,nan,0,no_convergence\n";
        }
    }
    log << "sweep: " << lambdas.size() << " multipliers -> " << (out / "sweep.csv").string()
        << "\n";
    return 0;
}

} // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read config " + path);

    FlatConfig fc;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << "config: line " << lineno << " is not 'key = value'";
            throw ParseError(os.str());
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty()) {
            std::ostringstream os;
            os << "config: line " << lineno << " has an empty key or value";
            throw ParseError(os.str());
        }
        json parsed = json::parse(val, nullptr, false);
        if (parsed.is_discarded()) {
            std::ostringstream os;
            os << "config: line " << lineno << ": '" << val << "' is not a JSON literal";
            throw ParseError(os.str());
        }
        fc.kv[key] = std::move(parsed);
    }

    RunConfig cfg;
    if (fc.has("mode")) cfg.mode = parse_mode(fc.str("mode"));
    if (fc.has("grid.n")) {
        const double v = fc.num("grid.n");
        if (!(v >= 2.0) || v != std::floor(v)) throw ParseError("config: grid.n must be an integer >= 2");
        cfg.grid_n = static_cast<std::size_t>(v);
    }
    if (fc.has("lambda")) cfg.lambda_override = fc.num("lambda");
    if (fc.has("out")) cfg.out_dir = fc.str("out");
    if (fc.has("envelope.values")) cfg.envelope_values = fc.arr("envelope.values");
    if (fc.has("sweep.lambdas")) cfg.sweep_lambdas = fc.arr("sweep.lambdas");

    bool any_problem = false;
    for (const auto& [k, v] : fc.kv)
        if (k.rfind("problem.", 0) == 0) any_problem = true;
    if (any_problem) {
        cfg.problem.beta = fc.num("problem.beta");
        if (fc.has("problem.premium")) cfg.problem.premium = fc.num("problem.premium");
        if (fc.has("problem.varpi")) cfg.problem.varpi_direct = fc.num("problem.varpi");
        cfg.problem.utility = build_utility(fc);
        cfg.problem.weighting = build_weighting(fc);
        cfg.problem.loss = build_loss(fc);
        cfg.problem.phi = build_phi(fc);
        cfg.have_problem = true;
    }
    return cfg;
}

void apply_overrides(RunConfig& cfg, const CliOverrides& ov) {
    if (ov.mode) cfg.mode = parse_mode(*ov.mode);
    if (ov.lambda) cfg.lambda_override = *ov.lambda;
    if (ov.grid_n) cfg.grid_n = *ov.grid_n;
    if (ov.out_dir) cfg.out_dir = *ov.out_dir;
}

int run(const RunConfig& cfg, std::ostream& log) {
    if (cfg.mode != RunMode::Envelope && !cfg.have_problem)
        throw ParseError("config: a problem block is required for this mode");
    switch (cfg.mode) {
    case RunMode::Solve: return run_solve(cfg, log);
    case RunMode::Feasibility: return run_feasibility(cfg, log);
    case RunMode::OracleCheck: return run_oracle_check(cfg, log);
    case RunMode::Envelope: return run_envelope(cfg, log);
    case RunMode::Sweep: return run_sweep(cfg, log);
    }
    throw Error("run: unreachable");
}

} // namespace contractsolve
