#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "contractsolve/errors.hpp"
#include "contractsolve/io.hpp"

namespace {

struct Args {
    std::string config;
    contractsolve::CliOverrides ov;
};

void add_common(CLI::App* sub, Args& args, double& lambda, bool& has_lambda,
                std::size_t& grid_n, bool& has_grid, std::string& out_dir, bool& has_out) {
    sub->add_option("--config", args.config, "run configuration file")->required();
    auto* l = sub->add_option("--lambda", lambda, "fixed multiplier instead of calibration");
    auto* g = sub->add_option("--grid-n", grid_n, "grid size override");
    auto* o = sub->add_option("--out", out_dir, "output directory override");
    sub->callback([&, l, g, o] {
        has_lambda = l->count() > 0;
        has_grid = g->count() > 0;
        has_out = o->count() > 0;
    });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantile contract solver"};
    app.require_subcommand(1);

    Args args;
    double lambda = 0.0;
    std::size_t grid_n = 0;
    std::string out_dir;
    bool has_lambda = false, has_grid = false, has_out = false;

    const char* modes[] = {"solve", "feasibility", "oracle-check", "envelope", "sweep"};
    const char* blurbs[] = {
        "calibrate the multiplier and emit quantile, contract and summary files",
        "classify the budget level against the feasibility threshold",
        "cross-check the solver against the coordinate-ascent reference",
        "concavify a sample vector (or the transformed budget weight)",
        "solve across a ladder of multipliers and tabulate the budgets",
    };
    for (int k = 0; k < 5; ++k)
        add_common(app.add_subcommand(modes[k], blurbs[k]), args, lambda, has_lambda, grid_n,
                   has_grid, out_dir, has_out);

    CLI11_PARSE(app, argc, argv);

    try {
        contractsolve::RunConfig cfg = contractsolve::load_config(args.config);
        args.ov.mode = app.get_subcommands().front()->get_name();
        if (has_lambda) args.ov.lambda = lambda;
        if (has_grid) args.ov.grid_n = grid_n;
        if (has_out) args.ov.out_dir = out_dir;
        contractsolve::apply_overrides(cfg, args.ov);
        return contractsolve::run(cfg, std::cout);
    } catch (const contractsolve::MultiplierTooSmall& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const contractsolve::NoConvergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const contractsolve::InfeasibleProblem& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const contractsolve::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
