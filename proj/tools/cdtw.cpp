#include <iostream>

#include <CLI11.hpp>

#include "cdtw/cli.hpp"

int main(int argc, char** argv) {
    using namespace cdtw::cli;
    CLI::App app{"Continuous dynamic time warping of polygonal curves"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "print this help message and exit");

    ComputeArgs ca;
    auto* compute = app.add_subcommand("compute", "exact value under a polygonal norm");
    compute->add_option("P", ca.p_file)->required();
    compute->add_option("Q", ca.q_file)->required();
    compute->add_option("--k", ca.norm.k, "number of polygon vertices (even, >= 4)")->required();
    compute->add_option("--psi", ca.norm.psi, "linear transform a b c d (row-major)")->expected(4);
    compute->add_option("--threads", ca.threads, "worker threads (CDTW_THREADS caps this)");
    compute->add_flag("--json", ca.json);
    compute->add_flag("--telemetry", ca.telemetry);

    ApproxArgs aa;
    auto* approx = app.add_subcommand("approx", "certified interval for the Euclidean value");
    approx->add_option("P", aa.p_file)->required();
    approx->add_option("Q", aa.q_file)->required();
    approx->add_option("--eps", aa.eps)->required();
    approx->add_flag("--json", aa.json);

    OracleArgs oa;
    auto* oracle = app.add_subcommand("oracle", "grid dynamic program");
    oracle->add_option("P", oa.p_file)->required();
    oracle->add_option("Q", oa.q_file)->required();
    oracle->add_option("--h", oa.h, "grid step")->required();
    oracle->add_option("--norm", oa.norm, "'euclid' or k");
    oracle->add_option("--psi", oa.psi)->expected(4);
    oracle->add_flag("--json", oa.json);

    VizArgs va;
    auto* viz = app.add_subcommand("viz", "SVG of the parameter space");
    viz->add_option("P", va.p_file)->required();
    viz->add_option("Q", va.q_file)->required();
    viz->add_option("--k", va.norm.k)->required();
    viz->add_option("--psi", va.norm.psi)->expected(4);
    viz->add_option("--svg", va.svg_path)->required();
    viz->add_option("--h", va.h, "oracle step for the path overlay");

    TranscendArgs ta;
    auto* tr = app.add_subcommand("transcend", "numeric report for the transcendental example");
    tr->add_flag("--json", ta.json_only);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : BadInput;
    }
    if (*compute) return run_compute(ca, std::cout, std::cerr);
    if (*approx) return run_approx(aa, std::cout, std::cerr);
    if (*oracle) return run_oracle(oa, std::cout, std::cerr);
    if (*viz) return run_viz(va, std::cout, std::cerr);
    return run_transcend(ta, std::cout, std::cerr);
}
