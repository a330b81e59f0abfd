#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bstd/decompose.hpp"
#include "bstd/io.hpp"
#include "bstd/laplace.hpp"
#include "bstd/mask_gen.hpp"

namespace bstd::cli {

/// Process exit codes. Stable; documented in the README.
enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kUnreadableInput = 2,
    kMaskMismatch = 3,
    kWriteFailed = 4,
};

using MaskSource = std::variant<MaskParams, std::filesystem::path>;

struct DecomposeOptions {
    MaskSource mask_source = MaskParams{};
    SolverOptions solver;
    int bit_depth = 16;
    std::optional<std::filesystem::path> report_path;
    /// Defaults to the directory of each input.
    std::optional<std::filesystem::path> out_dir;
    int jobs = 1;
};

struct PipelineOutput {
    Mask mask;
    DecompositionResult result;
    StageTimings timings;
};

/// Mask generation (or loading) followed by the decomposition, timed per stage.
PipelineOutput run_pipeline(const Image& f, const MaskSource& source, const SolverOptions& solver);

Report make_report(const std::string& input_path, const PipelineOutput& out);

int cmd_decompose(const std::vector<std::filesystem::path>& inputs, const DecomposeOptions& opts,
                  std::ostream& out, std::ostream& err);

int cmd_mask(const std::filesystem::path& input, const MaskParams& params,
             const std::filesystem::path& out_path, std::ostream& out, std::ostream& err);

struct BenchOptions {
    std::vector<std::filesystem::path> inputs;
    std::vector<std::pair<int, int>> synthetic;
    int repeats = 5;
    MaskParams mask;
    SolverOptions solver;
};

/// Prints one JSON document with per-stage medians and throughput.
int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err);

/// Full command line entry point.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace bstd::cli
