#include "cli.hpp"

#include "maxinv/baselines.hpp"
#include "maxinv/error.hpp"
#include "maxinv/eval.hpp"
#include "maxinv/explain.hpp"
#include "maxinv/io.hpp"
#include "maxinv/random.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <optional>
#include <sstream>

namespace maxinv::cli {

namespace {

namespace fs = std::filesystem;

// Bad flags, missing files, unreadable configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Stage ids for derive_seed; each randomised stage gets its own stream.
enum Stream : std::uint64_t { SmoothingStream = 1, SmoothGradStream = 2, RandomStream = 3 };

struct RunConfig {
    std::string model_path;
    std::string input_path;
    std::string dataset_path;
    std::vector<std::string> methods{"maxinv"};
    double delta = 0.1;
    std::optional<double> lambda;
    bool hard = false;
    std::string patch = "8x8";
    int smooth_n = 9;
    double smooth_sigma = 0.05;
    std::string smoothing_form = "rederived";
    std::uint64_t seed = 0;
    double mask_value = 0.5;
    std::string tau_grid = "0,10,20,30,40,50,60,70,80,90,100";
    std::string output_path;
    std::string output_layer = "logits";
    int jobs = 1;
    int ig_steps = 64;
    double ig_baseline = 0.0;
    std::string occlusion_mask = "1x1x1";
    int smoothgrad_n = 50;
    double smoothgrad_sigma = 0.15;
    std::string scores_file;
    std::string log_path;
};

void add_explain_options(CLI::App& cmd, RunConfig& cfg) {
    cmd.add_option("--model", cfg.model_path, "Model JSON")->required();
    cmd.add_option("--delta", cfg.delta, "Per-feature perturbation bound")->capture_default_str();
    cmd.add_option("--lambda", cfg.lambda, "Soft-constraint penalty (default 2*M*1e-4)");
    auto* hard = cmd.add_flag("--hard", cfg.hard, "Hard constraints");
    cmd.add_flag("--soft{false}", cfg.hard, "Soft constraints (default)")->excludes(hard);
    cmd.add_option("--patch", cfg.patch, "Parameter-sharing patch HxW, or 'none'")->capture_default_str();
    cmd.add_option("--smooth-n", cfg.smooth_n, "Number of smoothing noises")->capture_default_str();
    cmd.add_option("--smooth-sigma", cfg.smooth_sigma, "Smoothing noise std")->capture_default_str();
    cmd.add_option("--smoothing-form", cfg.smoothing_form, "rederived|literal")->capture_default_str();
    cmd.add_option("--seed", cfg.seed, "Root random seed")->capture_default_str();
    cmd.add_option("--output-layer", cfg.output_layer, "logits|softmax")->capture_default_str();
    cmd.add_option("--mask-value", cfg.mask_value, "Fill value for occlusion and masking")->capture_default_str();
    cmd.add_option("--ig-steps", cfg.ig_steps, "Integrated-gradients steps")->capture_default_str();
    cmd.add_option("--ig-baseline", cfg.ig_baseline, "Integrated-gradients baseline value")->capture_default_str();
    cmd.add_option("--occlusion-mask", cfg.occlusion_mask, "Occlusion tile HxWxC")->capture_default_str();
    cmd.add_option("--smoothgrad-n", cfg.smoothgrad_n, "SmoothGrad samples")->capture_default_str();
    cmd.add_option("--smoothgrad-sigma", cfg.smoothgrad_sigma, "SmoothGrad noise std")->capture_default_str();
}

std::vector<Index> parse_dims(const std::string& text, std::size_t count, const std::string& flag) {
    std::vector<Index> dims;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, 'x')) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(part, &used);
            if (used != part.size() || v <= 0) throw std::invalid_argument(part);
            dims.push_back(static_cast<Index>(v));
        } catch (const std::exception&) {
            throw ConfigError(flag + " expects positive integers like " + (count == 2 ? "8x8" : "12x12x3"));
        }
    }
    if (dims.size() != count) throw ConfigError(flag + " expects " + std::to_string(count) + " dimensions");
    return dims;
}

std::vector<double> parse_tau_grid(const std::string& text) {
    std::vector<double> taus;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            std::size_t used = 0;
            taus.push_back(std::stod(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw ConfigError("--tau-grid expects comma-separated numbers");
        }
    }
    return taus;
}

std::vector<std::string> split_methods(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    for (const auto& item : raw) {
        std::stringstream ss(item);
        std::string part;
        while (std::getline(ss, part, ',')) {
            if (part == "proposed") part = "maxinv";
            if (!part.empty()) out.push_back(part);
        }
    }
    return out;
}

// Everything a score method needs, resolved and validated up front.
struct Context {
    ModelD model;
    Shape shape;
    FeaturePartition partition;
    ExplainOptions explain;
    RunConfig cfg;
    Shape occlusion_mask;
    std::vector<Vec> external_scores;
};

void validate_common(const RunConfig& cfg) {
    if (!(cfg.delta > 0.0)) throw ConfigError("--delta must be positive");
    if (cfg.lambda && !(*cfg.lambda >= 0.0)) throw ConfigError("--lambda must be nonnegative");
    if (cfg.smooth_n < 0) throw ConfigError("--smooth-n must be nonnegative");
    if (!(cfg.smooth_sigma >= 0.0)) throw ConfigError("--smooth-sigma must be nonnegative");
    if (cfg.smoothing_form != "rederived" && cfg.smoothing_form != "literal") {
        throw ConfigError("--smoothing-form must be 'rederived' or 'literal'");
    }
    if (cfg.output_layer != "logits" && cfg.output_layer != "softmax") {
        throw ConfigError("--output-layer must be 'logits' or 'softmax'");
    }
    if (cfg.ig_steps < 1) throw ConfigError("--ig-steps must be at least 1");
    if (cfg.smoothgrad_n < 1) throw ConfigError("--smoothgrad-n must be at least 1");
    if (!(cfg.smoothgrad_sigma >= 0.0)) throw ConfigError("--smoothgrad-sigma must be nonnegative");
    if (cfg.jobs < 1) throw ConfigError("--jobs must be at least 1");
    if (cfg.methods.empty()) throw ConfigError("--method needs at least one method");
    static const std::vector<std::string> known{"maxinv", "gradient", "smoothgrad", "intgrad", "occlusion", "random", "external"};
    for (const auto& m : cfg.methods) {
        if (std::find(known.begin(), known.end(), m) == known.end()) {
            throw ConfigError("unknown method '" + m + "'");
        }
        if (m == "external" && cfg.scores_file.empty()) throw ConfigError("method 'external' needs --scores-file");
    }
}

ModelD load_model_checked(const RunConfig& cfg) {
    if (!fs::exists(cfg.model_path)) throw ConfigError("model file not found: " + cfg.model_path);
    return io::load_model(cfg.model_path, cfg.output_layer == "softmax" ? OutputKind::Softmax : OutputKind::Logits);
}

Context make_context(ModelD model, const Shape& shape, const RunConfig& cfg) {
    if (shape.size() != model.input_dim()) {
        throw ConfigError("input has " + std::to_string(shape.size()) + " features, model expects " +
                          std::to_string(model.input_dim()));
    }
    std::optional<FeaturePartition> partition;
    if (cfg.patch == "none") {
        partition = FeaturePartition::singletons(shape.size());
    } else {
        const auto hw = parse_dims(cfg.patch, 2, "--patch");
        partition = FeaturePartition::patches(shape, PatchGrid{hw[0], hw[1]});
    }
    const auto mask = parse_dims(cfg.occlusion_mask, 3, "--occlusion-mask");
    const Shape occ{mask[0], mask[1], mask[2]};
    if (occ.height > shape.height || occ.width > shape.width || occ.channels > shape.channels) {
        throw ConfigError("--occlusion-mask does not fit the input shape");
    }

    ExplainOptions opts;
    opts.delta = cfg.delta;
    opts.lambda = cfg.lambda;
    opts.soft = !cfg.hard;
    opts.smoothing.num_noises = cfg.smooth_n;
    opts.smoothing.sigma = cfg.smooth_sigma;
    opts.smoothing.form = cfg.smoothing_form == "literal" ? SmoothingForm::Literal : SmoothingForm::Rederived;
    return Context{std::move(model), shape, std::move(*partition), opts, cfg, occ, {}};
}

// Attribution for input `index` using method `name`; explanations for
// the proposed method are also returned through `explanation` when given.
AttributionMap score(const Context& ctx, const std::string& name, const Vec& x, std::size_t index,
                     Explanation* explanation = nullptr) {
    const std::uint64_t item = static_cast<std::uint64_t>(index);
    if (name == "maxinv") {
        ExplainOptions opts = ctx.explain;
        opts.smoothing.seed = derive_seed(derive_seed(ctx.cfg.seed, SmoothingStream), item);
        Explanation e = explain(ctx.model, x, ctx.partition, opts, ctx.shape);
        AttributionMap map{e.scores.per_feature, "maxinv", ctx.shape};
        if (explanation) *explanation = std::move(e);
        return map;
    }
    if (name == "gradient") return gradient_saliency(ctx.model, x, ctx.shape);
    if (name == "smoothgrad") {
        return smoothgrad(ctx.model, x, ctx.cfg.smoothgrad_n, ctx.cfg.smoothgrad_sigma,
                          derive_seed(derive_seed(ctx.cfg.seed, SmoothGradStream), item), ctx.shape);
    }
    if (name == "intgrad") {
        return integrated_gradients(ctx.model, x, Vec::Constant(x.size(), ctx.cfg.ig_baseline), ctx.cfg.ig_steps,
                                    ctx.shape)
            .map;
    }
    if (name == "occlusion") return occlusion(ctx.model, x, ctx.shape, ctx.occlusion_mask, ctx.cfg.mask_value);
    if (name == "random") {
        return random_scores(x.size(), derive_seed(derive_seed(ctx.cfg.seed, RandomStream), item), ctx.shape);
    }
    if (name == "external") {
        if (index >= ctx.external_scores.size()) throw InputError("score file has no entry for input " + std::to_string(index));
        return {ctx.external_scores[index], "external", ctx.shape};
    }
    throw ConfigError("unknown method '" + name + "'");
}

fs::path csv_sibling(const fs::path& json_path) {
    fs::path p = json_path;
    p.replace_extension(".csv");
    if (p == json_path) p += ".csv";
    return p;
}

int cmd_explain(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    validate_common(cfg);
    if (cfg.methods.size() != 1) throw ConfigError("explain takes exactly one --method");
    const std::string method = cfg.methods.front();
    if (method == "external") throw ConfigError("method 'external' is only available for evaluate");
    if (!fs::exists(cfg.input_path)) throw ConfigError("input file not found: " + cfg.input_path);
    const io::InputRecord input = io::load_input(cfg.input_path);
    ModelD model = load_model_checked(cfg);
    const Context ctx = make_context(std::move(model), input.shape.value_or(flat_shape(input.values.size())), cfg);

    Explanation e;
    const AttributionMap map = score(ctx, method, input.values, 0, &e);
    const io::json doc = method == "maxinv" ? io::score_map_to_json(e) : io::attribution_to_json(map);
    if (method == "maxinv" && e.box.w > 0.0 && e.scores.per_group.isZero(0.0)) {
        err << "warning: slack w=" << e.box.w << " relaxed every row and all scores are zero; "
            << "try a larger --lambda\n";
    }
    std::ostringstream csv;
    io::write_scores_csv(csv, map.per_feature);

    if (cfg.output_path.empty()) {
        out << doc.dump(2) << '\n';
    } else {
        io::write_file_atomic(cfg.output_path, doc.dump(2) + "\n");
        io::write_file_atomic(csv_sibling(cfg.output_path), csv.str());
    }
    return Ok;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
    validate_common(cfg);
    MaskSpec spec;
    spec.mask_value = cfg.mask_value;
    spec.tau_grid = parse_tau_grid(cfg.tau_grid);
    try {
        spec.validate();
    } catch (const InputError& e) {
        throw ConfigError(std::string("--tau-grid/--mask-value: ") + e.what());
    }
    if (!fs::exists(cfg.dataset_path)) throw ConfigError("dataset file not found: " + cfg.dataset_path);
    const Dataset dataset = io::load_dataset(cfg.dataset_path);
    ModelD model = load_model_checked(cfg);
    Context ctx = make_context(std::move(model), dataset.shape, cfg);
    if (!cfg.scores_file.empty()) {
        ctx.external_scores = io::load_score_file(cfg.scores_file);
        if (ctx.external_scores.size() != dataset.inputs.size()) {
            throw ConfigError("score file has " + std::to_string(ctx.external_scores.size()) +
                              " entries, dataset has " + std::to_string(dataset.inputs.size()));
        }
    }

    std::vector<NamedMethod> methods;
    for (const auto& name : cfg.methods) {
        methods.push_back({name, [&ctx, name](const Vec& x, std::size_t index) {
                               try {
                                   return score(ctx, name, x, index);
                               } catch (const InfeasibleError& e) {
                                   throw InfeasibleError("input " + std::to_string(index) + ": " + e.what());
                               } catch (const std::exception& e) {
                                   throw std::runtime_error("input " + std::to_string(index) + ": " + e.what());
                               }
                           }});
    }
    const auto curves = compare_methods(ctx.model, dataset, methods, spec, cfg.jobs);

    std::ostringstream csv;
    write_curves_csv(csv, curves);
    if (!cfg.log_path.empty()) {
        io::json log = io::json::array();
        for (const auto& c : curves) {
            log.push_back({{"method", c.method}, {"tau", c.taus}, {"change_ratio", c.change_ratios}});
        }
        io::write_file_atomic(cfg.log_path, log.dump(2) + "\n");
    }
    if (cfg.output_path.empty()) out << csv.str();
    else io::write_file_atomic(cfg.output_path, csv.str());
    return Ok;
}

int cmd_solve_lp(const std::string& path, const std::string& output, std::ostream& out) {
    if (!fs::exists(path)) throw ConfigError("LP file not found: " + path);
    LinearProgram<double> lp;
    try {
        lp = io::lp_from_json(io::read_json(path));
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
    const LPSolution<double> sol = solve(lp);
    const std::string text = io::solution_to_json(sol).dump(2) + "\n";
    if (output.empty()) out << text;
    else io::write_file_atomic(output, text);
    return sol.status == LPStatus::Optimal ? Ok : ComputeError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Maximally invariant perturbation explanations for differentiable classifiers", "maxinv"};
    app.require_subcommand(1);

    RunConfig cfg;
    auto* explain_cmd = app.add_subcommand("explain", "Score the features of one input");
    add_explain_options(*explain_cmd, cfg);
    explain_cmd->add_option("--input", cfg.input_path, "Input JSON or CSV")->required();
    explain_cmd->add_option("--method", cfg.methods, "maxinv|gradient|smoothgrad|intgrad|occlusion|random")
        ->capture_default_str();
    explain_cmd->add_option("--output", cfg.output_path, "Score JSON path (CSV written alongside)");

    auto* eval_cmd = app.add_subcommand("evaluate", "Run the quantile-masking benchmark");
    add_explain_options(*eval_cmd, cfg);
    eval_cmd->add_option("--dataset", cfg.dataset_path, "Dataset JSON or CSV")->required();
    eval_cmd->add_option("--method", cfg.methods, "Methods to compare (repeatable or comma-separated)")
        ->capture_default_str();
    eval_cmd->add_option("--tau-grid", cfg.tau_grid, "Comma-separated quantiles in [0, 100]")->capture_default_str();
    eval_cmd->add_option("--jobs", cfg.jobs, "Worker threads")->capture_default_str();
    eval_cmd->add_option("--scores-file", cfg.scores_file, "Precomputed scores for method 'external'");
    eval_cmd->add_option("--log", cfg.log_path, "Optional JSON log of the curves");
    eval_cmd->add_option("--output", cfg.output_path, "CSV output path (default stdout)");

    std::string lp_path, lp_output;
    auto* lp_cmd = app.add_subcommand("solve-lp", "Solve a linear program given as JSON");
    lp_cmd->add_option("path", lp_path, "LP JSON")->required();
    lp_cmd->add_option("--output", lp_output, "Solution JSON path (default stdout)");

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return Ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return Ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return UsageError;
    }

    try {
        cfg.methods = split_methods(cfg.methods);
        if (*explain_cmd) return cmd_explain(cfg, out, err);
        if (*eval_cmd) return cmd_evaluate(cfg, out);
        return cmd_solve_lp(lp_path, lp_output, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return UsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return ComputeError;
    }
}

}  // namespace maxinv::cli
