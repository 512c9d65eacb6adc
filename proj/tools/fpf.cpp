// fpf: command-line front end for the fixed-point history engine.
//
//   fpf propagate MODEL T_A T_B
//   fpf measure MODEL
//   fpf decompose MODEL
//   fpf verify [MODEL]
//   fpf envariance STATE TRANSFORM
//
// Exit codes: 0 success, 2 unreadable input, 3 numerical validation failure,
// 4 zero normalization, 5 combinatorial guard.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "fpf/commands.hpp"
#include "fpf/model_io.hpp"

int main(int argc, char** argv) {
    using namespace fpf;
    using namespace fpf::cli;

    CLI::App app{"Fixed-point quantum histories on the Keldysh contour"};
    app.require_subcommand(1);

    Options opt;
    std::string format = "text";
    app.add_option("--tol", opt.tol, "Equality tolerance for route and oracle checks")->capture_default_str();
    app.add_option("--steps-per-segment", opt.steps_per_segment, "Sub-steps per contour segment in the line integral")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--seed", opt.seed, "Monte Carlo seed")->capture_default_str();
    app.add_option("--trials", opt.trials, "Monte Carlo sample count")->capture_default_str();
    app.add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "structured"}))->capture_default_str();

    std::string model_path, state_path, transform_path;
    double t_a = 0.0, t_b = 0.0;

    auto* propagate = app.add_subcommand("propagate", "Print the propagator U(T_B, T_A)");
    propagate->add_option("model", model_path, "Model file")->required();
    propagate->add_option("t_a", t_a, "Start time")->required();
    propagate->add_option("t_b", t_b, "End time")->required();

    auto* measure = app.add_subcommand("measure", "Measures of existence over the constrained family");
    measure->add_option("model", model_path, "Model file")->required();

    auto* decompose = app.add_subcommand("decompose", "MORW / MMWF / MMWP / MDRW decompositions of a toy bundle");
    decompose->add_option("model", model_path, "Model file (three grid times, pivot constraint in the middle)")
        ->required();

    auto* verify = app.add_subcommand("verify", "Cross-check measures against brute-force oracles");
    verify->add_option("model", model_path, "Model file (built-in qubit model when omitted)");

    auto* envariance = app.add_subcommand("envariance", "Search for a counter-transformation on subsystem B");
    envariance->add_option("state", state_path, "Bipartite state file")->required();
    envariance->add_option("transform", transform_path, "Unitary on subsystem A")->required();

    for (auto* sub : {propagate, measure, decompose, verify, envariance}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_parse_error;
    }
    opt.format = format == "structured" ? Format::structured : Format::text;

    return guarded(std::cerr, [&]() -> int {
        if (*envariance) {
            const auto psi = parse_bipartite_state(io_detail::read_file(state_path), state_path);
            const auto u_a = parse_transform(io_detail::read_file(transform_path), psi.d_a, transform_path);
            return cmd_envariance(psi, u_a, opt, std::cout, std::cerr);
        }
        if (*verify && model_path.empty()) return cmd_verify(default_verify_model(), opt, std::cout, std::cerr);
        const ModelSpec model = load_model(model_path);
        if (*propagate) return cmd_propagate(model, t_a, t_b, opt, std::cout, std::cerr);
        if (*measure) return cmd_measure(model, opt, std::cout, std::cerr);
        if (*decompose) return cmd_decompose(model, opt, std::cout, std::cerr);
        return cmd_verify(model, opt, std::cout, std::cerr);
    });
}
