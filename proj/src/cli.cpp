#include "doalab/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "doalab/config.hpp"
#include "doalab/frontend.hpp"
#include "doalab/metrics.hpp"
#include "doalab/neural/checkpoint.hpp"
#include "doalab/neural/train.hpp"
#include "doalab/subspace.hpp"

namespace doalab::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kOk = 0, kUsage = 2, kBadConfig = 3, kMissingFile = 4, kRuntime = 5;

struct MissingFile : Error {
    explicit MissingFile(const std::string& p) : Error("missing file: " + p) {}
};
struct BadConfig : Error {
    explicit BadConfig(const std::string& m) : Error(m) {}
};

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw MissingFile(path);
}

Config load_config(const std::string& path) {
    require_file(path);
    try {
        return config_load(path);
    } catch (const Error& e) {
        throw BadConfig(e.what());
    }
}

void atomic_write(const std::string& path, const std::string& content) {
    if (const fs::path dir = fs::path(path).parent_path(); !dir.empty())
        fs::create_directories(dir);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        DOALAB_CHECK(out.good(), "cannot open " + tmp);
        out << content;
        DOALAB_CHECK(out.good(), "write failed for " + tmp);
    }
    fs::rename(tmp, path);
}

void atomic_wav_write(const std::string& path, const Waveform& w) {
    if (const fs::path dir = fs::path(path).parent_path(); !dir.empty())
        fs::create_directories(dir);
    const std::string tmp = path + ".tmp";
    wav_write(tmp, w);
    fs::rename(tmp, path);
}

std::string data_root(const std::string& flag, const Config& cfg) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("DOALAB_DATA_DIR"); env && *env) return env;
    if (!cfg.train.data_dir.empty()) return cfg.train.data_dir;
    throw Error("no dataset root: pass --data, set DOALAB_DATA_DIR, or train.data_dir");
}

DatasetManifest read_manifest(const std::string& dir, const std::string& split) {
    const std::string path = dir + "/" + split + ".jsonl";
    require_file(path);
    return manifest_read(path);
}

std::vector<UtteranceResult> read_predictions(const std::string& path) {
    require_file(path);
    std::ifstream in(path);
    std::vector<UtteranceResult> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error("bad prediction line in " + path + ": " + e.what());
        }
        UtteranceResult r;
        r.pred_deg = j.at("pred_deg").get<std::vector<double>>();
        r.ref_deg = j.at("ref_deg").get<std::vector<double>>();
        out.push_back(std::move(r));
    }
    DOALAB_CHECK(!out.empty(), "no predictions in " + path);
    return out;
}

SpatialSpectrum subspace_by_name(const std::string& method, const MultichannelSpectrogram& s,
                                 const ArrayGeometry& g, const AngularGrid& grid, int n) {
    if (method == "music") return music_spectrum(s, g, grid, n);
    if (method == "music-nam") return music_nam_spectrum(s, g, grid, n);
    if (method == "tops") return tops_spectrum(s, g, grid, n);
    throw Error("unknown method '" + method + "'");
}

// ---- simulate ----------------------------------------------------------

struct SimulateOpts {
    std::string config, out;
    uint64_t seed = 1;
};

int cmd_simulate(const SimulateOpts& o) {
    Config cfg = load_config(o.config);
    GenConfig g = cfg.simulate;
    if (!o.out.empty()) g.out_dir = o.out;
    if (g.out_dir.empty()) throw BadConfig("config: simulate.out_dir is empty");
    const auto manifests = dataset_generate(g, o.seed);
    std::printf("simulate: %zu train / %zu dev / %zu test examples under %s\n",
                manifests.at("train").size(), manifests.at("dev").size(),
                manifests.at("test").size(), g.out_dir.c_str());
    return kOk;
}

// ---- train -------------------------------------------------------------

struct TrainOpts {
    std::string config, model, loss, geometry, data, out = "model.ckpt", log;
    double gamma = 0.0, lr = 0.0, crop = 0.0;
    std::string pit, sharing;
    int run_index = -1, epochs = 0, batch = 0, max_train = -1, max_dev = -1;
    uint64_t seed = 1;
};

bool flag_on(const std::string& v, const char* name) {
    if (v == "on") return true;
    if (v == "off") return false;
    throw Error(std::string(name) + " must be 'on' or 'off'");
}

int cmd_train(const TrainOpts& o) {
    Config cfg;
    if (!o.config.empty()) cfg = load_config(o.config);

    RunSpec run;
    if (o.run_index >= 0) {
        if (static_cast<size_t>(o.run_index) >= cfg.runs.size())
            throw BadConfig("config: run index " + std::to_string(o.run_index) +
                            " out of range (have " + std::to_string(cfg.runs.size()) + ")");
        run = cfg.runs[static_cast<size_t>(o.run_index)];
    }
    if (!o.model.empty()) run.model = o.model;
    if (!o.loss.empty()) run.loss = o.loss;
    if (o.gamma > 0.0) run.gamma = o.gamma;
    if (!o.pit.empty()) run.pit = flag_on(o.pit, "--pit");
    if (!o.sharing.empty()) run.sharing = flag_on(o.sharing, "--predictor-sharing") ? 1 : 0;

    neural::TrainConfig t = cfg.train;
    if (!o.geometry.empty()) t.geometry = o.geometry;
    if (o.epochs > 0) t.epochs = o.epochs;
    if (o.batch > 0) t.batch = o.batch;
    if (o.lr > 0.0) t.lr = o.lr;
    if (o.crop > 0.0) t.crop_s = o.crop;
    if (o.max_train >= 0) t.max_train = o.max_train;
    if (o.max_dev >= 0) t.max_dev = o.max_dev;
    t.seed = o.seed;
    t.log_csv = o.log;
    t.loss = neural::loss_from_name(run.loss);
    t.pit = run.pit;
    t.data_dir = data_root(o.data, cfg);
    require_file(t.data_dir + "/train.jsonl");

    neural::ModelConfig mc;
    mc.kind = run.model;
    mc.n_sources = cfg.simulate.num_sources;
    mc.gamma_deg = run.gamma;
    mc.mics = ArrayGeometry::by_name(t.geometry).num_mics();
    mc.freq_bins = STFTConfig{}.num_bins();
    mc.sharing = run.sharing;

    neural::TrainResult res = neural::train(mc, t);
    if (const fs::path dir = fs::path(o.out).parent_path(); !dir.empty())
        fs::create_directories(dir);
    neural::save_checkpoint(o.out, res.model);
    std::printf("train: %s %s gamma=%g pit=%s, %d epochs, final dev MAE %.2f deg -> %s\n",
                run.model.c_str(), run.loss.c_str(), run.gamma, run.pit ? "on" : "off",
                t.epochs, res.dev_mae.empty() ? -1.0 : res.dev_mae.back(), o.out.c_str());
    return kOk;
}

// ---- estimate ----------------------------------------------------------

struct EstimateOpts {
    std::string ckpt, method = "model", data, split = "test", out = "preds.jsonl", geometry;
    double gamma = 1.0;
    bool chunked = false;
    int limit = 0;
};

int cmd_estimate(const EstimateOpts& o) {
    Config none;
    const std::string dir = data_root(o.data, none);
    DatasetManifest recs = read_manifest(dir, o.split);
    if (o.limit > 0 && static_cast<int>(recs.size()) > o.limit)
        recs.resize(static_cast<size_t>(o.limit));

    std::string lines;
    if (o.method == "model") {
        if (o.ckpt.empty()) throw Error("estimate --method model needs --ckpt");
        require_file(o.ckpt);
        neural::AnyModel<float> model = neural::load_checkpoint(o.ckpt);
        const std::string gname = o.geometry.empty() ? recs.front().geometry : o.geometry;
        const ArrayGeometry g = ArrayGeometry::by_name(gname);
        DOALAB_CHECK(g.num_mics() == model.cfg.mics,
                     "geometry " + gname + " does not match the checkpoint");
        for (const auto& r : recs) {
            const Waveform mix = wav_read(dir + "/" + r.mixture);
            const std::vector<double> est = o.chunked
                                                ? neural::chunked_estimate_angles(model, mix, g)
                                                : neural::estimate_angles(model, mix, g);
            json j{{"id", r.mixture}, {"pred_deg", est}, {"ref_deg", r.doas_deg}};
            lines += j.dump() + "\n";
        }
    } else {
        const AngularGrid grid(o.gamma);
        for (const auto& r : recs) {
            const std::string gname = o.geometry.empty() ? r.geometry : o.geometry;
            const ArrayGeometry g = ArrayGeometry::by_name(gname);
            const Waveform mix = wav_read(dir + "/" + r.mixture);
            const MultichannelSpectrogram s = stft(mix);
            const int n = static_cast<int>(r.doas_deg.size());
            const SpatialSpectrum sp = subspace_by_name(o.method, s, g, grid, n);
            json j{{"id", r.mixture}, {"pred_deg", pick_peaks(sp, n)}, {"ref_deg", r.doas_deg}};
            lines += j.dump() + "\n";
        }
    }
    atomic_write(o.out, lines);
    std::printf("estimate: %zu utterances (%s) -> %s\n", recs.size(), o.method.c_str(),
                o.out.c_str());
    return kOk;
}

// ---- beamform ----------------------------------------------------------

struct BeamformOpts {
    std::string data, split = "test", out = "separated";
    int ref_mic = 2;  // 1-based
    int limit = 0;
};

int cmd_beamform(const BeamformOpts& o) {
    Config none;
    const std::string dir = data_root(o.data, none);
    DatasetManifest recs = read_manifest(dir, o.split);
    if (o.limit > 0 && static_cast<int>(recs.size()) > o.limit)
        recs.resize(static_cast<size_t>(o.limit));
    DOALAB_CHECK(o.ref_mic >= 1, "--ref-mic is 1-based");
    const int ref = o.ref_mic - 1;

    double gain_sum = 0.0;
    size_t scored = 0;
    for (size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        DOALAB_CHECK(!r.images.empty(),
                     "beamform needs per-source images; regenerate with write_images");
        const Waveform mix = wav_read(dir + "/" + r.mixture);
        const MultichannelSpectrogram s = stft(mix);
        std::vector<MultichannelSpectrogram> imgs;
        std::vector<Waveform> img_wavs;
        for (const auto& rel : r.images) {
            img_wavs.push_back(wav_read(dir + "/" + rel));
            imgs.push_back(stft(img_wavs.back()));
        }
        const std::vector<neural::Matf> masks = ideal_binary_mask(imgs, ref);
        const std::vector<Waveform> outs = separate(s, masks, ref);

        const std::string stem = fs::path(r.mixture).stem().string();
        for (size_t n = 0; n < outs.size(); ++n) {
            atomic_wav_write(o.out + "/" + stem + "_src" + std::to_string(n) + ".wav",
                             outs[n]);
            Waveform est_ref, img_ref, mix_ref;
            est_ref.sample_rate = mix.sample_rate;
            est_ref.channels.push_back(outs[n].channels.at(0));
            img_ref.sample_rate = mix.sample_rate;
            img_ref.channels.push_back(img_wavs[n].channels.at(static_cast<size_t>(ref)));
            mix_ref.sample_rate = mix.sample_rate;
            mix_ref.channels.push_back(mix.channels.at(static_cast<size_t>(ref)));
            gain_sum += si_sdr(est_ref, img_ref) - si_sdr(mix_ref, img_ref);
            ++scored;
        }
    }
    std::printf("beamform: %zu utterances, mean SI-SDR gain %.2f dB -> %s\n", recs.size(),
                scored ? gain_sum / static_cast<double>(scored) : 0.0, o.out.c_str());
    return kOk;
}

// ---- evaluate ----------------------------------------------------------

struct EvaluateOpts {
    std::string preds, csv;
};

int cmd_evaluate(const EvaluateOpts& o) {
    const std::vector<UtteranceResult> results = read_predictions(o.preds);
    const double mae = corpus_mae(results);
    const auto bins = binned_mae(results);
    std::printf("examples: %zu\n", results.size());
    std::printf("mae_deg: %.2f\n", mae);
    for (const auto& [label, value] : bins)
        std::printf("separation %s: %.2f\n", label.c_str(), value);
    if (!o.csv.empty()) {
        std::string csv = "bin,mae_deg\n";
        char row[96];
        std::snprintf(row, sizeof(row), "all,%.2f\n", mae);
        csv += row;
        for (const auto& [label, value] : bins) {
            std::snprintf(row, sizeof(row), "%s,%.2f\n", label.c_str(), value);
            csv += row;
        }
        atomic_write(o.csv, csv);
    }
    return kOk;
}

// ---- spectrum ----------------------------------------------------------

struct SpectrumOpts {
    std::string wav, geometry = "uca10", method = "music-nam", out = "spectrum.csv";
    double gamma = 1.0;
    int peaks = 2;
};

int cmd_spectrum(const SpectrumOpts& o) {
    require_file(o.wav);
    const Waveform w = wav_read(o.wav);
    const ArrayGeometry g = ArrayGeometry::by_name(o.geometry);
    DOALAB_CHECK(w.num_channels() == g.num_mics(),
                 "wav channel count does not match --geometry");
    const AngularGrid grid(o.gamma);
    const SpatialSpectrum sp =
        subspace_by_name(o.method, stft(w), g, grid, o.peaks);

    std::string csv = "angle_deg,value\n";
    char row[64];
    for (int i = 0; i < grid.size; ++i) {
        std::snprintf(row, sizeof(row), "%.3f,%.9g\n", grid.class_angle_deg(i),
                      sp.values[static_cast<size_t>(i)]);
        csv += row;
    }
    atomic_write(o.out, csv);

    std::string peaks;
    for (double p : pick_peaks(sp, o.peaks)) {
        std::snprintf(row, sizeof(row), " %.1f", p);
        peaks += row;
    }
    std::printf("spectrum: %s peaks at%s deg -> %s\n", o.method.c_str(), peaks.c_str(),
                o.out.c_str());
    return kOk;
}

}  // namespace

int run(std::vector<std::string> args) {
    CLI::App app{"multichannel DOA estimation and source separation"};
    app.name("doalab");
    app.require_subcommand(1);

    SimulateOpts so;
    CLI::App* sim = app.add_subcommand("simulate", "synthesize a labeled mixture dataset");
    sim->add_option("--config", so.config, "experiment config (JSON)")->required();
    sim->add_option("--seed", so.seed, "root seed");
    sim->add_option("--out", so.out, "override simulate.out_dir");

    TrainOpts to;
    CLI::App* trn = app.add_subcommand("train", "train a localization model");
    trn->add_option("--config", to.config, "experiment config (JSON)");
    trn->add_option("--run", to.run_index, "row of the config runs[] grid to train");
    trn->add_option("--seed", to.seed, "root seed");
    trn->add_option("--model", to.model)
        ->check(CLI::IsMember({"mlc", "mask_split", "map_split_c", "map_split_r"}));
    trn->add_option("--loss", to.loss)
        ->check(CLI::IsMember({"bce", "ce", "sce", "emd", "semd"}));
    trn->add_option("--gamma", to.gamma, "grid resolution in degrees");
    trn->add_option("--pit", to.pit)->check(CLI::IsMember({"on", "off"}));
    trn->add_option("--predictor-sharing", to.sharing)->check(CLI::IsMember({"on", "off"}));
    trn->add_option("--geometry", to.geometry)
        ->check(CLI::IsMember({"uca5", "uca10", "qa10"}));
    trn->add_option("--data", to.data, "dataset root (or DOALAB_DATA_DIR)");
    trn->add_option("--epochs", to.epochs);
    trn->add_option("--batch", to.batch);
    trn->add_option("--lr", to.lr);
    trn->add_option("--crop", to.crop, "training crop in seconds");
    trn->add_option("--max-train", to.max_train, "cap the training split (0 = all)");
    trn->add_option("--max-dev", to.max_dev, "cap the dev split (0 = all)");
    trn->add_option("--out", to.out, "checkpoint path");
    trn->add_option("--log", to.log, "per-epoch CSV log path");

    EstimateOpts eo;
    CLI::App* est = app.add_subcommand("estimate", "predict DOAs for a dataset split");
    est->add_option("--method", eo.method)
        ->check(CLI::IsMember({"model", "music", "music-nam", "tops"}));
    est->add_option("--ckpt", eo.ckpt, "model checkpoint (method=model)");
    est->add_option("--data", eo.data, "dataset root (or DOALAB_DATA_DIR)");
    est->add_option("--split", eo.split)->check(CLI::IsMember({"train", "dev", "test"}));
    est->add_option("--gamma", eo.gamma, "grid resolution for subspace methods");
    est->add_option("--geometry", eo.geometry)
        ->check(CLI::IsMember({"uca5", "uca10", "qa10"}));
    est->add_flag("--chunked", eo.chunked, "100 ms chunks, 50% overlap, circular median");
    est->add_option("--limit", eo.limit, "cap the number of utterances (0 = all)");
    est->add_option("--out", eo.out, "predictions JSONL path");

    BeamformOpts bo;
    CLI::App* bf = app.add_subcommand("beamform", "oracle-mask MVDR separation");
    bf->add_option("--data", bo.data, "dataset root (or DOALAB_DATA_DIR)");
    bf->add_option("--split", bo.split)->check(CLI::IsMember({"train", "dev", "test"}));
    bf->add_option("--ref-mic", bo.ref_mic, "reference microphone, 1-based");
    bf->add_option("--limit", bo.limit, "cap the number of utterances (0 = all)");
    bf->add_option("--out", bo.out, "output directory for separated WAVs");

    EvaluateOpts vo;
    CLI::App* ev = app.add_subcommand("evaluate", "score a predictions file");
    ev->add_option("--preds", vo.preds, "predictions JSONL")->required();
    ev->add_option("--csv", vo.csv, "also write the metrics as CSV");

    SpectrumOpts po;
    CLI::App* sp = app.add_subcommand("spectrum", "dump a subspace spatial spectrum");
    sp->add_option("--wav", po.wav, "multichannel WAV input")->required();
    sp->add_option("--geometry", po.geometry)
        ->check(CLI::IsMember({"uca5", "uca10", "qa10"}));
    sp->add_option("--method", po.method)
        ->check(CLI::IsMember({"music", "music-nam", "tops"}));
    sp->add_option("--gamma", po.gamma, "grid resolution in degrees");
    sp->add_option("--peaks", po.peaks, "number of peaks to report");
    sp->add_option("--out", po.out, "spectrum CSV path");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (sim->parsed()) return cmd_simulate(so);
        if (trn->parsed()) return cmd_train(to);
        if (est->parsed()) return cmd_estimate(eo);
        if (bf->parsed()) return cmd_beamform(bo);
        if (ev->parsed()) return cmd_evaluate(vo);
        if (sp->parsed()) return cmd_spectrum(po);
    } catch (const MissingFile& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kMissingFile;
    } catch (const BadConfig& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}

}  // namespace doalab::cli
