#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Order-k Voronoi coverage tools"};
    app.require_subcommand(1);

    kcover::cli::Options opt;
    std::string out;
    std::uint64_t seed = 0;
    std::string scenario;
    std::string input;

    const char* names[] = {"partition", "simulate", "lloyd", "mmeans", "analyze", "render"};
    const char* blurbs[] = {"build one order-k partition", "integrate a continuous control law",
                            "run the higher-order Lloyd iteration", "run m-means on a point set",
                            "linearize the Lloyd map at a fixed point", "draw a partition snapshot as SVG"};
    for (int i = 0; i < 6; ++i) {
        auto* sub = app.add_subcommand(names[i], blurbs[i]);
        if (i < 5) sub->add_option("--scenario", scenario, "scenario JSON")->required();
        else sub->add_option("--input", input, "snapshot JSON")->required();
        sub->add_option("--out", out, "output directory");
        sub->add_option("--seed", seed, "override the scenario seed");
        sub->add_option("--threads", opt.threads, "worker threads, 0 for all cores");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    auto* chosen = app.get_subcommands().front();
    opt.scenario = scenario;
    opt.input = input;
    if (!out.empty()) opt.out = out;
    if (chosen->count("--seed") > 0) opt.seed = seed;
    return kcover::cli::run(chosen->get_name(), opt);
}
