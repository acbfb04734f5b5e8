#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace kcover::cli {

struct Options {
    std::filesystem::path scenario;
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    std::filesystem::path input;  // render only
    unsigned threads = 0;
};

// Files written by one command, relative to the output directory.
struct RunArtifacts {
    std::filesystem::path dir;
    std::vector<std::string> files;
};

RunArtifacts cmd_partition(const Options& opt);
RunArtifacts cmd_simulate(const Options& opt);
RunArtifacts cmd_lloyd(const Options& opt);
RunArtifacts cmd_mmeans(const Options& opt);
RunArtifacts cmd_analyze(const Options& opt);
RunArtifacts cmd_render(const Options& opt);

// Runs a subcommand by name and maps failures to exit codes: 0 ok, 2 bad
// input, 3 numeric failure. Messages go to stderr.
int run(const std::string& command, const Options& opt);

}  // namespace kcover::cli
