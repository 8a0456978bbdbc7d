// Acceptance suite: one pass/fail line per criterion.
//
//   1  gradient oracle on the reduced model (finite differences)
//   2  SRS filter/oracle equivalence and high-frequency asymptote
//   3  metric arithmetic on hand-computed toy sets
//   4  byte determinism of the CLI pipeline across runs and thread counts
//   5  end-to-end directional comparison on the default synthetic dataset
//   6  ablation directions over three seeds
//   7  low-pass filter passband/stopband/DC spec
//   8  round-trip invariants (normalize, dataset files, checkpoints)
//
// Usage: acceptance [criterion ...]   (default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "shockcal/baselines.hpp"
#include "shockcal/calibnet.hpp"
#include "shockcal/io.hpp"
#include "shockcal/metrics.hpp"
#include "shockcal/report.hpp"
#include "shockcal/srs.hpp"
#include "shockcal/synth.hpp"

using namespace shockcal;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool passed = true;
    std::string detail;

    void check(bool cond, const std::string& why_failed) {
        if (!cond && passed) {
            passed = false;
            detail = why_failed;
        }
    }
};

// --- shared fixtures ---------------------------------------------------------

const Dataset& default_dataset() {
    static const Dataset ds = generate_dataset(RigConfig{}, LowEndModel{});
    return ds;
}

std::vector<ShockSignal> lows_of(const std::vector<SignalPair>& pairs) {
    std::vector<ShockSignal> v;
    v.reserve(pairs.size());
    for (const auto& p : pairs) v.push_back(p.low);
    return v;
}

std::vector<ShockSignal> highs_of(const std::vector<SignalPair>& pairs) {
    std::vector<ShockSignal> v;
    v.reserve(pairs.size());
    for (const auto& p : pairs) v.push_back(p.high);
    return v;
}

// Trained full-model eps_p on the default test split, memoized per
// (flags, seed) so criteria 5 and 6 share work within one process.
const CalibModel& trained_model(const AblationFlags& flags, std::uint64_t seed) {
    static std::map<std::string, CalibModel> cache;
    std::ostringstream key;
    key << flags.ppn_uses_z << flags.use_linf_term << flags.ppn_residual << ':' << seed;
    auto it = cache.find(key.str());
    if (it == cache.end()) {
        TrainConfig cfg;
        cfg.seed = seed;
        CalibModel m = make_calib_model(CalibDims{}, flags, seed);
        train(m, default_dataset().train, cfg);
        it = cache.emplace(key.str(), std::move(m)).first;
    }
    return it->second;
}

EvalReport eval_calibrated(const CalibModel& m) {
    std::vector<ShockSignal> preds;
    preds.reserve(default_dataset().test.size());
    for (const auto& p : default_dataset().test) preds.push_back(calibrate(m, p.low));
    return evaluate(preds, highs_of(default_dataset().test));
}

// --- criterion 1: gradient oracle -------------------------------------------

Outcome criterion1() {
    Outcome out;
    const auto t0 = Clock::now();
    const auto result = calibnet_grad_check(CalibDims::reduced(30, 8, 4), 1, 20);
    const double elapsed = seconds_since(t0);

    out.check(result.points_checked == 20,
              "only " + std::to_string(result.points_checked) + " kink-free points found");
    out.check(result.max_rel_err <= 1e-4,
              "max rel err " + fmt_g(result.max_rel_err) + " > 1e-4");
    out.check(elapsed < 60.0, "runtime " + fmt_g(elapsed) + " s exceeds 1 min");
    if (out.passed)
        out.detail = "max rel err " + fmt_g(result.max_rel_err) + ", 20 points, " +
                     fmt_g(elapsed) + " s";
    return out;
}

// --- criterion 2: SRS oracle equivalence ------------------------------------

Outcome criterion2() {
    Outcome out;
    const auto t0 = Clock::now();
    const auto grid = log_freq_grid(kDefaultSrsFminHz, kDefaultSrsFmaxHz,
                                    kDefaultSrsPointsPerOctave);
    double worst_rel = 0.0;

    auto compare = [&](const ShockSignal& s) {
        const auto filt = srs_maximax(s, grid);
        const auto oracle = srs_oracle(s, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double denom = std::max(oracle.values[i], 1e-12);
            worst_rel = std::max(worst_rel, std::fabs(filt.values[i] - oracle.values[i]) / denom);
        }
        return filt;
    };

    // the reference pulse: 100 g, 11 ms haversine
    ShockSignal pulse;
    pulse.samples.assign(kSignalLength, 0.0);
    const auto n_pulse = static_cast<std::size_t>(0.011 * pulse.sample_rate);
    for (std::size_t k = 0; k <= n_pulse && 100 + k < kSignalLength; ++k) {
        const double s = std::sin(std::numbers::pi * static_cast<double>(k) /
                                  static_cast<double>(n_pulse));
        pulse.samples[100 + k] = 100.0 * s * s;
    }
    const auto pulse_srs = compare(pulse);
    // asymptote: every grid point above 10/width (909 Hz) within 5% of the peak
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid[i] >= 10.0 / 0.011)
            out.check(std::fabs(pulse_srs.values[i] - 100.0) <= 5.0,
                      "haversine asymptote off at " + fmt_g(grid[i]) + " Hz: " +
                          fmt_g(pulse_srs.values[i]) + " g");

    // ten synthetic signals: five clean drops, five degraded measurements
    for (int i = 0; i < 5; ++i) {
        RngStream rng(321, static_cast<std::uint64_t>(i));
        const double width = rng.log_uniform(0.0005, 0.002);
        const auto truth = simulate_drop(rng.log_uniform(500.0, 8000.0), width, rng);
        const auto truth_srs = compare(truth);
        RngStream drng(321, static_cast<std::uint64_t>(50 + i));
        compare(degrade(truth, LowEndModel{}, drng));

        const double peak = std::fabs(detect_peak(truth).value);
        for (std::size_t k = 0; k < grid.size(); ++k)
            if (grid[k] >= 10.0 / width)
                out.check(std::fabs(truth_srs.values[k] - peak) <= 0.05 * peak,
                          "drop asymptote off at " + fmt_g(grid[k]) + " Hz");
    }

    const double elapsed = seconds_since(t0);
    out.check(worst_rel <= 0.01, "filter/oracle disagree by " + fmt_g(worst_rel));
    out.check(elapsed < 120.0, "runtime " + fmt_g(elapsed) + " s exceeds 2 min");
    if (out.passed)
        out.detail = "worst filter/oracle gap " + fmt_g(worst_rel) + ", " + fmt_g(elapsed) + " s";
    return out;
}

// --- criterion 3: metric arithmetic ------------------------------------------

Outcome criterion3() {
    Outcome out;
    auto sig = [](std::vector<double> v) { return ShockSignal{std::move(v), kSampleRateHz}; };

    const std::vector<ShockSignal> refs{sig({0.0, 2.0, 1.0}), sig({1.0, -5.0, 4.0}),
                                        sig({0.5, 0.25, 1.0})};
    const std::vector<ShockSignal> preds{sig({0.0, 2.5, 1.0}), sig({2.0, -6.0, 3.0}),
                                         sig({0.25, 0.25, 1.5})};
    const auto r = evaluate(preds, refs);
    out.check(r.eps_p == 1.0 / 3.0, "eps_p " + fmt_g(r.eps_p) + " != 1/3 exactly");
    out.check(r.eps_s == 1.75 / 3.0, "eps_s " + fmt_g(r.eps_s) + " != 1.75/3 exactly");

    // constant 1 g error over 3000 samples, peak 100 -> eps_s = 30 exactly
    std::vector<double> ref3000(3000, 0.0);
    ref3000[500] = 100.0;
    std::vector<double> pred3000 = ref3000;
    for (auto& v : pred3000) v += 1.0;
    const auto r2 = evaluate({sig(pred3000)}, {sig(ref3000)});
    out.check(r2.eps_s == 30.0, "constant-error eps_s " + fmt_g(r2.eps_s) + " != 30");
    out.check(r2.eps_p == 0.01, "constant-error eps_p " + fmt_g(r2.eps_p) + " != 0.01");

    out.check(metric_eps_p(refs, refs) == 0.0, "eps_p not zero on identical sets");
    out.check(metric_eps_s(refs, refs) == 0.0, "eps_s not zero on identical sets");
    if (out.passed) out.detail = "toy-set values exact, zero on identical sets";
    return out;
}

// --- criterion 4: pipeline determinism ---------------------------------------

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome criterion4() {
    Outcome out;
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "shockcal_acceptance_c4";
    fs::remove_all(dir);
    fs::create_directories(dir);

    auto pipeline = [&](const std::string& tag, int threads) -> std::string {
        const std::string prefix = (dir / ("ds_" + tag)).string();
        const std::string model = (dir / ("net_" + tag + ".shkm")).string();
        const std::string report = (dir / ("report_" + tag + ".csv")).string();
        const std::string env = "SHOCKCAL_THREADS=" + std::to_string(threads) + " ";
        const std::string cli = SHOCKCAL_CLI_PATH;
        int rc = std::system((env + cli + " synth --pairs 40 --train 30 --seed 11 --out " +
                              prefix + " >/dev/null 2>&1")
                                 .c_str());
        if (WEXITSTATUS(rc) != 0) return "synth failed";
        rc = std::system((env + cli + " train --data " + prefix + ".train.shkd --out " + model +
                          " --epochs 3 --batch 16 --seed 11 >/dev/null 2>&1")
                             .c_str());
        if (WEXITSTATUS(rc) != 0) return "train failed";
        rc = std::system((env + cli + " eval --data " + prefix + ".test.shkd --method raw" +
                          " --method net --model net=" + model + " --report " + report +
                          " >/dev/null 2>&1")
                             .c_str());
        if (WEXITSTATUS(rc) != 0) return "eval failed";
        return file_bytes(prefix + ".train.shkd") + "|" + file_bytes(model) + "|" +
               file_bytes(report);
    };

    const std::string run1 = pipeline("a", 1);
    const std::string run2 = pipeline("b", 1);
    const std::string run4 = pipeline("c", 4);
    out.check(run1.size() > 100, "pipeline did not produce outputs: " + run1);
    out.check(run1 == run2, "two identical runs differ");
    out.check(run1 == run4, "SHOCKCAL_THREADS=4 changes the output bytes");
    fs::remove_all(dir);
    if (out.passed) out.detail = "dataset, checkpoint and report bytes identical across runs and threads";
    return out;
}

// --- criterion 5: end-to-end directional reproduction -------------------------

Outcome criterion5() {
    Outcome out;
    const auto t0 = Clock::now();
    const auto& ds = default_dataset();
    const auto refs = highs_of(ds.test);
    const auto lows = lows_of(ds.test);

    const auto raw = evaluate(lows, refs);

    std::vector<ShockSignal> lpf_preds;
    const auto filter = design_lowpass(5000.0);
    for (const auto& s : lows) lpf_preds.push_back(apply_zero_phase(filter, s));
    const auto lpf = evaluate(lpf_preds, refs);

    const auto lm = fit_linear(ds.train);
    std::vector<ShockSignal> lr_preds;
    for (const auto& s : lows) lr_preds.push_back(predict_linear(lm, s));
    const auto lr = evaluate(lr_preds, refs);

    TrainConfig cfg;  // defaults: 300 epochs, batch 32, lr 1e-3, seed 1
    const AeModel ae_model = ae_baseline(ds.train, cfg, CalibDims{}, cfg.seed);
    std::vector<ShockSignal> ae_preds;
    for (const auto& s : lows) ae_preds.push_back(ae_calibrate(ae_model, s));
    const auto ae = evaluate(ae_preds, refs);

    const auto net = eval_calibrated(trained_model(AblationFlags{}, cfg.seed));
    const double elapsed = seconds_since(t0);

    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "eps_p%%: raw %.2f lpf %.2f lr %.2f ae %.2f net %.2f | eps_s: raw %.1f "
                  "lpf %.1f lr %.1f ae %.1f net %.1f | %.0f s",
                  100 * raw.eps_p, 100 * lpf.eps_p, 100 * lr.eps_p, 100 * ae.eps_p,
                  100 * net.eps_p, raw.eps_s, lpf.eps_s, lr.eps_s, ae.eps_s, net.eps_s,
                  elapsed);
    out.detail = buf;

    out.check(raw.eps_p >= 0.10 && raw.eps_p <= 0.17,
              "raw eps_p " + fmt_g(raw.eps_p) + " outside [0.10, 0.17]; " + out.detail);
    out.check(lpf.eps_p > raw.eps_p, "lpf did not degrade the peak; " + out.detail);
    out.check(ae.eps_p - net.eps_p >= -0.003, "net not ahead of ae; " + out.detail);
    out.check(lr.eps_p - ae.eps_p >= -0.003, "ae not ahead of lr; " + out.detail);
    out.check(net.eps_s < raw.eps_s, "net eps_s not below raw; " + out.detail);
    out.check(lpf.eps_s < raw.eps_s, "lpf eps_s not below raw; " + out.detail);
    out.check(elapsed <= 1800.0, "runtime " + fmt_g(elapsed) + " s exceeds 30 min");
    return out;
}

// --- criterion 6: ablation directions ----------------------------------------

Outcome criterion6() {
    Outcome out;
    const std::vector<std::uint64_t> seeds{1, 2, 3};

    auto mean_eps_p = [&](const AblationFlags& flags) {
        double sum = 0.0;
        for (auto seed : seeds) sum += eval_calibrated(trained_model(flags, seed)).eps_p;
        return sum / static_cast<double>(seeds.size());
    };

    const double full = mean_eps_p(AblationFlags{});
    AblationFlags no_z;
    no_z.ppn_uses_z = false;
    const double without_z = mean_eps_p(no_z);
    AblationFlags no_linf;
    no_linf.use_linf_term = false;
    const double without_linf = mean_eps_p(no_linf);
    AblationFlags no_res;
    no_res.ppn_residual = false;
    const double without_res = mean_eps_p(no_res);

    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "mean eps_p%%: full %.2f, no-z %.2f, no-linf %.2f, no-residual %.2f",
                  100 * full, 100 * without_z, 100 * without_linf, 100 * without_res);
    out.detail = buf;

    out.check(without_z > full, std::string("removing z did not hurt; ") + buf);
    out.check(without_linf > full, std::string("removing L-inf did not hurt; ") + buf);
    out.check(without_res > full, std::string("removing the residual did not hurt; ") + buf);
    return out;
}

// --- criterion 7: filter spec -------------------------------------------------

Outcome criterion7() {
    Outcome out;
    const auto f = design_lowpass(5000.0);

    double dc = 0.0;
    for (double t : f.taps) dc += t;
    out.check(std::fabs(dc - 1.0) <= 1e-9, "DC gain " + fmt_g(dc) + " not 1 within 1e-9");

    auto tone_db = [&](double freq) {
        ShockSignal s;
        s.samples.resize(3000);
        for (std::size_t i = 0; i < s.samples.size(); ++i)
            s.samples[i] = std::sin(2.0 * std::numbers::pi * freq *
                                    static_cast<double>(i) / s.sample_rate);
        const auto y = apply_zero_phase(f, s);
        double peak = 0.0;
        for (std::size_t i = y.size() / 3; i < 2 * y.size() / 3; ++i)
            peak = std::max(peak, std::fabs(y.samples[i]));
        return 20.0 * std::log10(peak);
    };

    const double db_1k = tone_db(1000.0);
    const double db_20k = tone_db(20000.0);
    out.check(std::fabs(db_1k) <= 0.5, "1 kHz deviation " + fmt_g(db_1k) + " dB");
    out.check(db_20k <= -40.0, "20 kHz attenuation only " + fmt_g(-db_20k) + " dB");
    if (out.passed)
        out.detail = "DC exact, 1 kHz " + fmt_g(db_1k) + " dB, 20 kHz " + fmt_g(db_20k) + " dB";
    return out;
}

// --- criterion 8: round-trip invariants ---------------------------------------

Outcome criterion8() {
    Outcome out;
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "shockcal_acceptance_c8";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // normalize/denormalize identity
    RngStream rng(88, 0);
    for (int rep = 0; rep < 100; ++rep) {
        ShockSignal s;
        s.samples.resize(200);
        for (auto& v : s.samples) v = rng.uniform(-5000.0, 5000.0);
        const auto back = denormalize(normalize(s));
        for (std::size_t j = 0; j < s.size(); ++j) {
            const double scale = std::max(std::fabs(s.samples[j]), 1.0);
            out.check(std::fabs(back.samples[j] - s.samples[j]) <= 1e-12 * scale,
                      "normalize round-trip exceeded 1e-12");
        }
    }

    // dataset file round-trip
    RigConfig cfg;
    cfg.n_pairs = 8;
    cfg.train_count = 6;
    cfg.master_seed = 17;
    const auto ds = generate_dataset(cfg, LowEndModel{});
    const std::string ds_path = (dir / "ds.shkd").string();
    write_dataset_file(ds_path, ds.train);
    const auto loaded = read_dataset_file(ds_path);
    out.check(loaded.size() == ds.train.size(), "dataset pair count changed");
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        out.check(loaded[i].low.samples == ds.train[i].low.samples,
                  "dataset low signal not bit-exact");
        out.check(loaded[i].high.samples == ds.train[i].high.samples,
                  "dataset high signal not bit-exact");
    }

    // checkpoint round-trip
    AblationFlags flags;
    flags.ppn_residual = false;
    const CalibModel m = make_calib_model(CalibDims::reduced(40, 8, 4), flags, 5);
    const std::string ck_path = (dir / "m.shkm").string();
    save_checkpoint(ck_path, m);
    const CalibModel lm = load_calib_checkpoint(ck_path);
    out.check(flatten(lm.encoder) == flatten(m.encoder) &&
                  flatten(lm.decoder) == flatten(m.decoder) &&
                  flatten(lm.ppn_compress) == flatten(m.ppn_compress) &&
                  flatten(lm.ppn_head) == flatten(m.ppn_head),
              "checkpoint parameters not bit-exact");
    out.check(lm.flags.ppn_residual == false, "checkpoint flags not preserved");

    // corruption rejected
    auto corrupt_one = [&](const std::string& src, const std::string& dst, std::size_t at) {
        auto bytes = file_bytes(src);
        bytes[at] ^= 0x10;
        std::ofstream(dst, std::ios::binary) << bytes;
    };
    const std::string bad_ds = (dir / "bad.shkd").string();
    corrupt_one(ds_path, bad_ds, file_bytes(ds_path).size() / 2);
    bool caught = false;
    try {
        read_dataset_file(bad_ds);
    } catch (const ChecksumMismatch&) {
        caught = true;
    }
    out.check(caught, "corrupted dataset accepted");

    const std::string bad_ck = (dir / "bad.shkm").string();
    corrupt_one(ck_path, bad_ck, file_bytes(ck_path).size() / 2);
    caught = false;
    try {
        load_calib_checkpoint(bad_ck);
    } catch (const ChecksumMismatch&) {
        caught = true;
    }
    out.check(caught, "corrupted checkpoint accepted");

    fs::remove_all(dir);
    if (out.passed) out.detail = "identity within 1e-12, files bit-exact, corruption rejected";
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
    if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8};

    const char* names[] = {"",
                           "gradient oracle",
                           "SRS oracle equivalence",
                           "metric arithmetic",
                           "pipeline determinism",
                           "end-to-end directional reproduction",
                           "ablation directions",
                           "filter spec",
                           "round-trip invariants"};

    bool all_passed = true;
    for (int c : which) {
        Outcome out;
        switch (c) {
            case 1: out = criterion1(); break;
            case 2: out = criterion2(); break;
            case 3: out = criterion3(); break;
            case 4: out = criterion4(); break;
            case 5: out = criterion5(); break;
            case 6: out = criterion6(); break;
            case 7: out = criterion7(); break;
            case 8: out = criterion8(); break;
            default:
                std::printf("[FAIL] criterion %d: unknown criterion\n", c);
                all_passed = false;
                continue;
        }
        std::printf("[%s] criterion %d: %s (%s)\n", out.passed ? "PASS" : "FAIL", c, names[c],
                    out.detail.c_str());
        std::fflush(stdout);
        all_passed &= out.passed;
    }
    return all_passed ? 0 : 4;
}
