#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "doalab/dataset.hpp"
#include "doalab/features.hpp"
#include "doalab/neural/losses.hpp"
#include "doalab/neural/models.hpp"

namespace doalab::neural {

struct Adam {
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long t = 0;
    std::vector<Matf> m, v;

    void attach(const NamedParams<float>& params);
    void step(const NamedParams<float>& params);
};

struct TrainConfig {
    LossKind loss = LossKind::Sce;
    bool pit = false;
    int epochs = 50;
    int batch = 16;
    double lr = 1e-3;
    double crop_s = 1.0;  // training crop; dev runs full utterances
    uint64_t seed = 1;
    std::string data_dir;   // root holding train.jsonl / dev.jsonl
    std::string geometry = "uca10";
    std::string log_csv;    // empty = no log
    int max_train = 0;      // 0 = whole split
    int max_dev = 0;
};

struct TrainResult {
    AnyModel<float> model;
    std::vector<double> train_loss;
    std::vector<double> dev_loss;
    std::vector<double> dev_mae;
};

int ipd_width(const ArrayGeometry& g, int freq_bins);

TrainResult train(const ModelConfig& mc, const TrainConfig& tc);

Matf model_features(const ModelConfig& cfg, const MultichannelSpectrogram& s,
                    const ArrayGeometry& g);

// whole-utterance decode; split models keep per-source order, mlc picks peaks
std::vector<double> estimate_angles(AnyModel<float>& model, const Waveform& mix,
                                    const ArrayGeometry& g);

// 100 ms chunks, 50 ms hop, per-chunk ascending angles, circular median per
// slot; shorter inputs fall back to one whole-utterance estimate
std::vector<double> chunked_estimate_angles(AnyModel<float>& model, const Waveform& mix,
                                            const ArrayGeometry& g);

double circular_median_deg(const std::vector<double>& angles_deg);

}  // namespace doalab::neural
