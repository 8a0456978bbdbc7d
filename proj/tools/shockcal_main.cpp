// shockcal: synthetic shock-calibration pipeline front end.
//
// Subcommands: synth (generate a dataset), train (fit a model), eval
// (Table-style method comparison), srs (frequency-domain curves for one
// test pair), gradcheck (finite-difference verification of the training
// gradients).
//
// Exit codes: 0 success, 2 validation error, 3 I/O or checksum error,
// 4 acceptance-check failure.

#include <CLI11.hpp>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "shockcal/baselines.hpp"
#include "shockcal/calibnet.hpp"
#include "shockcal/io.hpp"
#include "shockcal/metrics.hpp"
#include "shockcal/report.hpp"
#include "shockcal/srs.hpp"
#include "shockcal/synth.hpp"

namespace {

using namespace shockcal;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;
constexpr int kExitCheckFailed = 4;

struct SynthArgs {
    std::size_t pairs = 660;
    std::size_t train = 500;
    std::uint64_t seed = 1;
    double peak_min = 500.0;
    double peak_max = 8000.0;
    std::string out;
};

int run_synth(const SynthArgs& a) {
    RigConfig cfg;
    cfg.n_pairs = a.pairs;
    cfg.train_count = a.train;
    cfg.master_seed = a.seed;
    cfg.peak_min_g = a.peak_min;
    cfg.peak_max_g = a.peak_max;

    const Dataset ds = generate_dataset(cfg, LowEndModel{});
    write_dataset_file(a.out + ".train.shkd", ds.train);
    write_dataset_file(a.out + ".test.shkd", ds.test);

    std::vector<double> peaks;
    peaks.reserve(ds.train.size());
    for (const auto& p : ds.train) peaks.push_back(std::fabs(detect_peak(p.high).value));
    std::fputs(format_peak_histogram_csv(peaks, cfg.peak_min_g, cfg.peak_max_g).c_str(),
               stdout);
    std::fprintf(stderr, "wrote %zu train pairs to %s.train.shkd, %zu test pairs to %s.test.shkd\n",
                 ds.train.size(), a.out.c_str(), ds.test.size(), a.out.c_str());
    return kExitOk;
}

struct TrainArgs {
    std::string data;
    std::string out;
    int epochs = 300;
    double lr = 1e-3;
    int batch = 32;
    std::uint64_t seed = 1;
    std::vector<std::string> ablate;
    std::string arch = "net";
};

int run_train(const TrainArgs& a) {
    AblationFlags flags;
    for (const auto& f : a.ablate) {
        if (f == "no-z")
            flags.ppn_uses_z = false;
        else if (f == "no-linf")
            flags.use_linf_term = false;
        else if (f == "no-residual")
            flags.ppn_residual = false;
        else
            throw InvalidConfig("unknown ablation flag: " + f +
                                " (expected no-z, no-linf, no-residual)");
    }

    const auto pairs = read_dataset_file(a.data);
    TrainConfig cfg;
    cfg.epochs = a.epochs;
    cfg.batch_size = a.batch;
    cfg.learning_rate = a.lr;
    cfg.seed = a.seed;

    LossTrace trace;
    if (a.arch == "net") {
        CalibModel model = make_calib_model(CalibDims{}, flags, a.seed);
        trace = train(model, pairs, cfg);
        save_checkpoint(a.out, model);
    } else if (a.arch == "ae") {
        const AeModel model = ae_baseline(pairs, cfg, CalibDims{}, a.seed, &trace);
        save_checkpoint(a.out, model);
    } else {
        throw InvalidConfig("unknown --arch: " + a.arch + " (expected net or ae)");
    }
    write_text_file(a.out + ".loss.csv", format_loss_trace_csv(trace));
    std::fprintf(stderr, "wrote checkpoint %s and loss trace %s.loss.csv\n", a.out.c_str(),
                 a.out.c_str());
    return kExitOk;
}

struct EvalArgs {
    std::string data;
    std::vector<std::string> methods;
    std::vector<std::string> models;  // "<method>=<path>"
    std::string train_data;
    std::string report;
};

int run_eval(const EvalArgs& a) {
    const auto pairs = read_dataset_file(a.data);
    std::vector<ShockSignal> lows, refs;
    for (const auto& p : pairs) {
        lows.push_back(p.low);
        refs.push_back(p.high);
    }

    std::map<std::string, std::string> model_paths;
    for (const auto& m : a.models) {
        const auto eq = m.find('=');
        if (eq == std::string::npos)
            throw InvalidConfig("--model expects <method>=<path>, got: " + m);
        model_paths[m.substr(0, eq)] = m.substr(eq + 1);
    }

    std::vector<MethodReport> rows;
    for (const auto& method : a.methods) {
        std::vector<ShockSignal> preds;
        preds.reserve(lows.size());
        if (method == "raw") {
            preds = lows;
        } else if (method == "lpf") {
            const auto filter = design_lowpass(5000.0, pairs.front().low.sample_rate);
            for (const auto& s : lows) preds.push_back(apply_zero_phase(filter, s));
        } else if (method == "lr") {
            if (a.train_data.empty())
                throw MissingModelForMethod("method lr needs --train-data");
            const auto lm = fit_linear(read_dataset_file(a.train_data));
            for (const auto& s : lows) preds.push_back(predict_linear(lm, s));
        } else if (method == "ae") {
            if (!model_paths.count("ae"))
                throw MissingModelForMethod("method ae needs --model ae=<path>");
            const AeModel model = load_ae_checkpoint(model_paths.at("ae"));
            for (const auto& s : lows) preds.push_back(ae_calibrate(model, s));
        } else if (method == "net") {
            if (!model_paths.count("net"))
                throw MissingModelForMethod("method net needs --model net=<path>");
            const CalibModel model = load_calib_checkpoint(model_paths.at("net"));
            for (const auto& s : lows) preds.push_back(calibrate(model, s));
        } else {
            throw InvalidConfig("unknown method: " + method);
        }
        rows.push_back({method, evaluate(preds, refs)});
    }

    std::fputs(format_eval_table(rows).c_str(), stdout);
    if (!a.report.empty()) write_text_file(a.report, format_eval_csv(rows));
    return kExitOk;
}

struct SrsArgs {
    std::string data;
    std::string model;
    std::size_t index = 0;
    std::string out;
    std::string svg;
};

int run_srs(const SrsArgs& a) {
    const auto pairs = read_dataset_file(a.data);
    if (a.index >= pairs.size())
        throw IndexOutOfRange("--index " + std::to_string(a.index) + " out of range (have " +
                              std::to_string(pairs.size()) + " pairs)");
    const CalibModel model = load_calib_checkpoint(a.model);
    const auto& pair = pairs[a.index];
    const ShockSignal calibrated = calibrate(model, pair.low);

    const auto grid = log_freq_grid(kDefaultSrsFminHz, kDefaultSrsFmaxHz,
                                    kDefaultSrsPointsPerOctave);
    const auto low = srs_maximax(pair.low, grid);
    const auto high = srs_maximax(pair.high, grid);
    const auto cal = srs_maximax(calibrated, grid);

    write_text_file(a.out, format_srs_csv(grid, low.values, high.values, cal.values));
    if (!a.svg.empty())
        write_text_file(a.svg, render_srs_svg(grid, {low.values, high.values, cal.values},
                                              {"low-end", "high-end", "calibrated"}));
    std::fprintf(stderr, "wrote SRS curves for pair %zu to %s\n", a.index, a.out.c_str());
    return kExitOk;
}

struct GradcheckArgs {
    std::string dims = "30,8,4";
    std::uint64_t seed = 1;
    int points = 20;
    double tolerance = 1e-4;
    bool corrupt = false;
};

int run_gradcheck(const GradcheckArgs& a) {
    int signal = 0, latent = 0, zc = 0;
    if (std::sscanf(a.dims.c_str(), "%d,%d,%d", &signal, &latent, &zc) != 3 || signal < 4 ||
        latent < 2 || zc < 1)
        throw InvalidConfig("--dims expects <signal>,<latent>,<z_compressed>, got: " + a.dims);

    const auto result = calibnet_grad_check(CalibDims::reduced(signal, latent, zc), a.seed,
                                            a.points, 150, 1e-5, a.corrupt);
    std::printf("gradcheck: dims %d/%d/%d, %d points (%d kink-adjacent draws skipped)\n",
                signal, latent, zc, result.points_checked, result.points_skipped);
    std::printf("max relative error: %.3e (tolerance %.1e)\n", result.max_rel_err,
                a.tolerance);
    if (result.points_checked < a.points) {
        std::printf("FAIL: could not find %d kink-free points\n", a.points);
        return kExitCheckFailed;
    }
    if (result.max_rel_err > a.tolerance) {
        std::printf("FAIL: analytic and finite-difference gradients disagree\n");
        return kExitCheckFailed;
    }
    std::printf("PASS\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shock-signal calibration pipeline"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "generate a synthetic drop-test dataset");
    synth->add_option("--pairs", synth_args.pairs, "total signal pairs")->capture_default_str();
    synth->add_option("--train", synth_args.train, "pairs in the training split")
        ->capture_default_str();
    synth->add_option("--seed", synth_args.seed, "master seed")->capture_default_str();
    synth->add_option("--peak-min", synth_args.peak_min, "minimum target peak [g]")
        ->capture_default_str();
    synth->add_option("--peak-max", synth_args.peak_max, "maximum target peak [g]")
        ->capture_default_str();
    synth->add_option("--out", synth_args.out, "output path prefix")->required();

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train the calibration network");
    train_cmd->add_option("--data", train_args.data, "training dataset (.shkd)")->required();
    train_cmd->add_option("--out", train_args.out, "checkpoint output path")->required();
    train_cmd->add_option("--epochs", train_args.epochs)->capture_default_str();
    train_cmd->add_option("--lr", train_args.lr)->capture_default_str();
    train_cmd->add_option("--batch", train_args.batch)->capture_default_str();
    train_cmd->add_option("--seed", train_args.seed)->capture_default_str();
    train_cmd->add_option("--ablate", train_args.ablate,
                          "disable a component: no-z, no-linf, no-residual");
    train_cmd->add_option("--arch", train_args.arch, "net (full model) or ae (baseline)")
        ->capture_default_str();

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate methods on a test dataset");
    eval_cmd->add_option("--data", eval_args.data, "test dataset (.shkd)")->required();
    eval_cmd->add_option("--method", eval_args.methods, "raw, lpf, lr, ae, net (repeatable)")
        ->required();
    eval_cmd->add_option("--model", eval_args.models, "<method>=<checkpoint path> (repeatable)");
    eval_cmd->add_option("--train-data", eval_args.train_data,
                         "training dataset, required for method lr");
    eval_cmd->add_option("--report", eval_args.report, "write the comparison CSV here");

    SrsArgs srs_args;
    auto* srs_cmd = app.add_subcommand("srs", "SRS curves for one test pair");
    srs_cmd->add_option("--data", srs_args.data, "test dataset (.shkd)")->required();
    srs_cmd->add_option("--model", srs_args.model, "calibnet checkpoint")->required();
    srs_cmd->add_option("--index", srs_args.index, "pair index")->capture_default_str();
    srs_cmd->add_option("--out", srs_args.out, "output CSV path")->required();
    srs_cmd->add_option("--svg", srs_args.svg, "optional SVG plot path");

    GradcheckArgs grad_args;
    auto* grad_cmd = app.add_subcommand("gradcheck", "verify gradients on a reduced model");
    grad_cmd->add_option("--dims", grad_args.dims, "signal,latent,z_compressed")
        ->capture_default_str();
    grad_cmd->add_option("--seed", grad_args.seed)->capture_default_str();
    grad_cmd->add_option("--points", grad_args.points, "random parameter points to check")
        ->capture_default_str();
    grad_cmd->add_option("--tolerance", grad_args.tolerance)->capture_default_str();
    grad_cmd->add_flag("--corrupt-gradient", grad_args.corrupt,
                       "test hook: damage one gradient entry (must fail)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (synth->parsed()) return run_synth(synth_args);
        if (train_cmd->parsed()) return run_train(train_args);
        if (eval_cmd->parsed()) return run_eval(eval_args);
        if (srs_cmd->parsed()) return run_srs(srs_args);
        if (grad_cmd->parsed()) return run_gradcheck(grad_args);
    } catch (const ChecksumMismatch& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
    return kExitOk;
}
