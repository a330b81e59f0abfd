#include "bstd/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "bstd/phantom.hpp"

namespace bstd::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string output_extension(const fs::path& input)
{
    std::string ext = input.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" ? ".png" : ".pgm";
}

// Writes go to temporaries that are renamed only once every file succeeded.
class StagedOutputs {
public:
    ~StagedOutputs()
    {
        std::error_code ec;
        for (const auto& [tmp, final_path] : staged_) {
            fs::remove(tmp, ec);
        }
    }

    fs::path stage(const fs::path& final_path)
    {
        fs::path tmp = final_path;
        tmp.replace_filename("." + final_path.stem().string() + ".partial" +
                             final_path.extension().string());
        staged_.emplace_back(tmp, final_path);
        return tmp;
    }

    void commit()
    {
        for (const auto& [tmp, final_path] : staged_) {
            std::error_code ec;
            fs::rename(tmp, final_path, ec);
            if (ec) {
                throw IoError("cannot move " + tmp.string() + " to " + final_path.string() + ": " +
                              ec.message());
            }
        }
        staged_.clear();
    }

private:
    std::vector<std::pair<fs::path, fs::path>> staged_;
};

struct JobResult {
    int code = kOk;
    std::string stdout_text;
    std::string stderr_text;
};

JobResult decompose_one(const fs::path& input, const DecomposeOptions& opts)
{
    JobResult job;
    std::ostringstream out;
    std::ostringstream err;
    const auto t0 = Clock::now();

    Image f(1, 1);
    try {
        f = read_grayscale(input);
    } catch (const std::exception& e) {
        job.code = kUnreadableInput;
        job.stderr_text = "error: " + std::string(e.what()) + "\n";
        return job;
    }

    std::optional<PipelineOutput> run;
    try {
        run = run_pipeline(f, opts.mask_source, opts.solver);
    } catch (const DimensionError& e) {
        job.code = kMaskMismatch;
        job.stderr_text = "error: " + std::string(e.what()) + "\n";
        return job;
    } catch (const IoError& e) {
        job.code = kUnreadableInput;
        job.stderr_text = "error: mask: " + std::string(e.what()) + "\n";
        return job;
    } catch (const FormatError& e) {
        job.code = kUnreadableInput;
        job.stderr_text = "error: mask: " + std::string(e.what()) + "\n";
        return job;
    }

    const fs::path dir = opts.out_dir ? *opts.out_dir : input.parent_path();
    const std::string stem = input.stem().string();
    const std::string ext = output_extension(input);
    const fs::path soft_path = dir / (stem + "_soft" + ext);
    const fs::path bone_path = dir / (stem + "_bone" + ext);
    const fs::path report_path =
        opts.report_path ? *opts.report_path : dir / (stem + "_report.json");

    Report report = make_report(input.string(), *run);
    try {
        StagedOutputs staged;
        std::size_t clipped = write_grayscale(run->result.soft_tissue, staged.stage(soft_path),
                                              opts.bit_depth);
        clipped += write_grayscale(run->result.bone, staged.stage(bone_path), opts.bit_depth);
        report.timings.total_s = seconds_since(t0);
        write_report(report, staged.stage(report_path));
        staged.commit();
        if (clipped > 0) {
            err << "warning: " << clipped << " output pixels clamped to [0,1]\n";
        }
    } catch (const std::exception& e) {
        job.code = kWriteFailed;
        job.stderr_text = err.str() + "error: " + e.what() + "\n";
        return job;
    }

    out << input.string() << ": alpha=" << std::setprecision(9) << report.alpha
        << " total_s=" << std::setprecision(4) << report.timings.total_s;
    if (report.degenerate) {
        out << " degenerate";
    }
    if (!report.converged) {
        out << " converged=false";
    }
    out << "\n";
    job.stdout_text = out.str();
    job.stderr_text = err.str();
    return job;
}

double median_of(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ThresholdMode parse_threshold(const std::string& text)
{
    if (text == "otsu") {
        return OtsuThreshold{};
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || !(v >= 0.0 && v <= 1.0)) {
        throw CLI::ValidationError("--threshold", "expected 'otsu' or a value in [0,1]");
    }
    return FixedThreshold{v};
}

std::pair<int, int> parse_size(const std::string& text)
{
    int w = 0;
    int h = 0;
    char sep = 0;
    std::istringstream in(text);
    if (!(in >> w >> sep >> h) || (sep != 'x' && sep != 'X') || w < 2 || h < 2 ||
        !in.eof()) {
        throw CLI::ValidationError("--synthetic", "expected WxH with W, H >= 2, got " + text);
    }
    return {w, h};
}

struct MaskFlags {
    std::string threshold = "otsu";
    int close_radius = MaskParams{}.close_radius;
    int dilate_radius = MaskParams{}.dilate_radius;
    std::size_t min_area = MaskParams{}.min_component_area;

    void attach(CLI::App* cmd)
    {
        cmd->add_option("--threshold", threshold, "otsu or a fixed value in [0,1]");
        cmd->add_option("--close", close_radius, "closing radius in pixels")
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--dilate", dilate_radius, "final dilation radius in pixels")
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--min-area", min_area, "drop bright components smaller than this");
    }

    MaskParams params() const
    {
        MaskParams p;
        p.threshold = parse_threshold(threshold);
        p.close_radius = close_radius;
        p.dilate_radius = dilate_radius;
        p.min_component_area = min_area;
        return p;
    }
};

struct SolverFlags {
    double tol = SolverOptions{}.tol;
    int max_vcycles = SolverOptions{}.max_vcycles;

    void attach(CLI::App* cmd)
    {
        cmd->add_option("--tol", tol, "max-norm residual target")->check(CLI::PositiveNumber);
        cmd->add_option("--max-vcycles", max_vcycles, "V-cycle cap")->check(CLI::PositiveNumber);
    }

    SolverOptions options() const
    {
        SolverOptions s;
        s.tol = tol;
        s.max_vcycles = max_vcycles;
        return s;
    }
};

} // namespace

PipelineOutput run_pipeline(const Image& f, const MaskSource& source, const SolverOptions& solver)
{
    const auto t0 = Clock::now();
    Mask mask = std::holds_alternative<MaskParams>(source)
                    ? auto_mask(f, std::get<MaskParams>(source))
                    : read_mask(std::get<fs::path>(source));
    require_same_shape(f, mask, "mask file");
    const double mask_s = seconds_since(t0);

    DecompositionResult result = decompose(f, mask, solver);
    StageTimings timings;
    timings.mask_s = mask_s;
    timings.solve_s = result.timings.solve_s;
    timings.decompose_s = result.timings.decompose_s;
    timings.total_s = seconds_since(t0);
    return {std::move(mask), std::move(result), timings};
}

Report make_report(const std::string& input_path, const PipelineOutput& out)
{
    Report r;
    r.input_path = input_path;
    r.width = out.result.bone.width();
    r.height = out.result.bone.height();
    r.alpha = out.result.alpha;
    r.solver_residual = out.result.stats.final_residual;
    r.solver_iterations = out.result.stats.iterations;
    r.clamped_pixel_count = out.result.clamped_pixel_count;
    r.contrast_gain_median = out.result.contrast.median_gain;
    r.timings = out.timings;
    r.converged = out.result.stats.converged;
    r.degenerate = out.result.degenerate;
    return r;
}

int cmd_decompose(const std::vector<fs::path>& inputs, const DecomposeOptions& opts,
                  std::ostream& out, std::ostream& err)
{
    if (inputs.empty()) {
        err << "error: no input images\n";
        return kUsage;
    }
    if (opts.report_path && inputs.size() > 1) {
        err << "error: --report names a single file; omit it for batch runs\n";
        return kUsage;
    }
    if (opts.bit_depth != 8 && opts.bit_depth != 16) {
        err << "error: --depth must be 8 or 16\n";
        return kUsage;
    }
    if (opts.out_dir && !fs::is_directory(*opts.out_dir)) {
        err << "error: output directory does not exist: " << opts.out_dir->string() << "\n";
        return kWriteFailed;
    }

    std::vector<JobResult> results(inputs.size());
    const int jobs = std::clamp<int>(opts.jobs, 1, static_cast<int>(inputs.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < inputs.size(); i = next++) {
            results[i] = decompose_one(inputs[i], opts);
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int j = 0; j < jobs; ++j) {
            pool.emplace_back(worker);
        }
    }

    int code = kOk;
    std::vector<std::string> failed;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        out << results[i].stdout_text;
        err << results[i].stderr_text;
        if (results[i].code != kOk) {
            failed.push_back(inputs[i].string());
            if (code == kOk) {
                code = results[i].code;
            }
        }
    }
    if (inputs.size() > 1 && !failed.empty()) {
        err << "failed " << failed.size() << " of " << inputs.size() << ":";
        for (const auto& f : failed) {
            err << " " << f;
        }
        err << "\n";
    }
    return code;
}

int cmd_mask(const fs::path& input, const MaskParams& params, const fs::path& out_path,
             std::ostream& out, std::ostream& err)
{
    Image f(1, 1);
    try {
        f = read_grayscale(input);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUnreadableInput;
    }
    const Mask mask = auto_mask(f, params);
    try {
        StagedOutputs staged;
        write_mask(mask, staged.stage(out_path));
        staged.commit();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kWriteFailed;
    }
    out << out_path.string() << ": " << mask.count() << " of " << mask.size()
        << " pixels inside the mask\n";
    return kOk;
}

int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err)
{
    if (opts.inputs.empty() && opts.synthetic.empty()) {
        err << "error: bench needs input images or --synthetic WxH\n";
        return kUsage;
    }
    if (opts.repeats < 1) {
        err << "error: --repeats must be at least 1\n";
        return kUsage;
    }

    struct Case {
        std::string name;
        Image image;
    };
    std::vector<Case> cases;
    for (const auto& path : opts.inputs) {
        try {
            cases.push_back({path.string(), read_grayscale(path)});
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return kUnreadableInput;
        }
    }
    for (const auto& [w, h] : opts.synthetic) {
        cases.push_back({"synthetic:" + std::to_string(w) + "x" + std::to_string(h),
                         xray_phantom(w, h)});
    }

    nlohmann::ordered_json doc;
    doc["repeats"] = opts.repeats;
    doc["results"] = nlohmann::json::array();
    std::vector<double> medians;
    for (const auto& c : cases) {
        std::vector<double> mask_s;
        std::vector<double> solve_s;
        std::vector<double> decompose_s;
        std::vector<double> total_s;
        std::optional<PipelineOutput> last;
        for (int r = 0; r < opts.repeats; ++r) {
            last = run_pipeline(c.image, opts.mask, opts.solver);
            mask_s.push_back(last->timings.mask_s);
            solve_s.push_back(last->timings.solve_s);
            decompose_s.push_back(last->timings.decompose_s);
            total_s.push_back(last->timings.total_s);
        }
        const double megapixels = static_cast<double>(c.image.size()) / 1e6;
        const double median_total = median_of(total_s);
        medians.push_back(median_total);

        nlohmann::ordered_json entry;
        entry["name"] = c.name;
        entry["width"] = c.image.width();
        entry["height"] = c.image.height();
        entry["megapixels"] = megapixels;
        entry["samples_total_s"] = total_s;
        entry["median"] = {{"mask_s", median_of(mask_s)},
                           {"solve_s", median_of(solve_s)},
                           {"decompose_s", median_of(decompose_s)},
                           {"total_s", median_total}};
        entry["mpix_per_s"] = median_total > 0.0 ? megapixels / median_total : 0.0;
        entry["alpha"] = last->result.alpha;
        entry["vcycles"] = last->result.stats.iterations;
        entry["converged"] = last->result.stats.converged;
        doc["results"].push_back(entry);
    }

    if (cases.size() >= 2) {
        doc["scaling"] = nlohmann::json::array();
        for (std::size_t i = 1; i < cases.size(); ++i) {
            const double pixel_ratio = static_cast<double>(cases[i].image.size()) /
                                       static_cast<double>(cases[i - 1].image.size());
            doc["scaling"].push_back({{"from", cases[i - 1].name},
                                      {"to", cases[i].name},
                                      {"pixel_ratio", pixel_ratio},
                                      {"time_ratio", medians[i] / medians[i - 1]}});
        }
    }
    out << doc.dump(2) << "\n";
    return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Bone and soft-tissue decomposition of grayscale radiographs"};
    app.require_subcommand(1);

    // decompose
    auto* dec = app.add_subcommand("decompose", "split images into soft-tissue and bone layers");
    std::vector<std::string> dec_inputs;
    std::string mask_arg = "auto";
    MaskFlags dec_mask;
    SolverFlags dec_solver;
    int depth = 16;
    std::string out_dir;
    std::string report;
    int jobs = 1;
    dec->add_option("inputs", dec_inputs, "input images (PGM or PNG)")->required();
    dec->add_option("--mask", mask_arg, "auto, or a mask image (value > 0.5 is inside)");
    dec_mask.attach(dec);
    dec_solver.attach(dec);
    dec->add_option("--depth", depth, "output bit depth")->check(CLI::IsMember({8, 16}));
    dec->add_option("--out-dir", out_dir, "output directory (default: beside each input)");
    dec->add_option("--report", report, "report path (single input only)");
    dec->add_option("--jobs", jobs, "images processed in parallel")->check(CLI::PositiveNumber);

    // mask
    auto* msk = app.add_subcommand("mask", "write the automatic bone-covering mask");
    std::string mask_input;
    std::string mask_out;
    MaskFlags mask_flags;
    msk->add_option("input", mask_input, "input image")->required();
    msk->add_option("--out", mask_out, "output mask image")->required();
    mask_flags.attach(msk);

    // bench
    auto* bench = app.add_subcommand("bench", "time the full pipeline");
    std::vector<std::string> bench_inputs;
    std::vector<std::string> synthetic;
    int repeats = 5;
    MaskFlags bench_mask;
    SolverFlags bench_solver;
    bench->add_option("inputs", bench_inputs, "input images");
    bench->add_option("--synthetic", synthetic, "synthetic phantom size WxH (repeatable)");
    bench->add_option("--repeats", repeats, "runs per image")->check(CLI::PositiveNumber);
    bench_mask.attach(bench);
    bench_solver.attach(bench);

    try {
        app.parse(argc, argv);

        if (dec->parsed()) {
            DecomposeOptions opts;
            if (mask_arg == "auto") {
                opts.mask_source = dec_mask.params();
            } else {
                opts.mask_source = fs::path(mask_arg);
            }
            opts.solver = dec_solver.options();
            opts.bit_depth = depth;
            if (!out_dir.empty()) {
                opts.out_dir = fs::path(out_dir);
            }
            if (!report.empty()) {
                opts.report_path = fs::path(report);
            }
            opts.jobs = jobs;
            std::vector<fs::path> paths(dec_inputs.begin(), dec_inputs.end());
            return cmd_decompose(paths, opts, out, err);
        }
        if (msk->parsed()) {
            return cmd_mask(mask_input, mask_flags.params(), mask_out, out, err);
        }
        BenchOptions opts;
        opts.inputs.assign(bench_inputs.begin(), bench_inputs.end());
        for (const auto& s : synthetic) {
            opts.synthetic.push_back(parse_size(s));
        }
        opts.repeats = repeats;
        opts.mask = bench_mask.params();
        opts.solver = bench_solver.options();
        return cmd_bench(opts, out, err);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kOk : kUsage;
    }
}

} // namespace bstd::cli
