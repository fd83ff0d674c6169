#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "doalab/metrics.hpp"
#include "doalab/neural/checkpoint.hpp"
#include "doalab/neural/train.hpp"
#include "doalab/subspace.hpp"

namespace doalab::neural {

using nlohmann::json;

LossKind loss_from_name(const std::string& name) {
    if (name == "bce") return LossKind::Bce;
    if (name == "ce") return LossKind::Ce;
    if (name == "sce") return LossKind::Sce;
    if (name == "emd") return LossKind::Emd;
    if (name == "semd") return LossKind::Semd;
    throw Error("unknown loss '" + name + "'");
}

const char* loss_name(LossKind k) {
    switch (k) {
        case LossKind::Bce: return "bce";
        case LossKind::Ce: return "ce";
        case LossKind::Sce: return "sce";
        case LossKind::Emd: return "emd";
        case LossKind::Semd: return "semd";
    }
    return "?";
}

void ModelConfig::validate() const {
    const bool known = kind == "mlc" || kind == "mask_split" || kind == "map_split_c" ||
                       kind == "map_split_r";
    DOALAB_CHECK(known, "model kind must be one of mlc|mask_split|map_split_c|map_split_r");
    DOALAB_CHECK(n_sources >= 1 && n_sources <= 4, "n_sources must be 1..4");
    DOALAB_CHECK(gamma_deg > 0, "gamma must be positive");
    const double k = 360.0 / gamma_deg;
    DOALAB_CHECK(std::abs(k - std::round(k)) < 1e-9, "gamma must divide 360");
    DOALAB_CHECK(mics == 3 || mics == 8, "mics must be 3 or 8");
    DOALAB_CHECK(freq_bins >= 5, "freq_bins too small for the conv stack");
}

std::vector<double> decode_posteriors(const std::vector<Vec<float>>& posts,
                                      const AngularGrid& grid) {
    std::vector<double> out;
    out.reserve(posts.size());
    for (const auto& p : posts) {
        DOALAB_CHECK(p.size() == grid.size, "decode_posteriors: size mismatch");
        int best = 0;
        for (Eigen::Index i = 1; i < p.size(); ++i)
            if (p(i) > p(best)) best = static_cast<int>(i);
        out.push_back(grid.class_angle_deg(best));
    }
    return out;
}

std::vector<double> decode_mlc(const Vec<float>& kappa, const AngularGrid& grid, int n) {
    DOALAB_CHECK(kappa.size() == grid.size, "decode_mlc: size mismatch");
    SpatialSpectrum sp{grid, {}};
    sp.values.resize(static_cast<size_t>(kappa.size()));
    for (Eigen::Index i = 0; i < kappa.size(); ++i)
        sp.values[static_cast<size_t>(i)] = static_cast<double>(kappa(i));
    return pick_peaks(sp, n);
}

namespace {

constexpr char kMagic[8] = {'D', 'O', 'A', 'L', 'A', 'B', 'C', 'K'};
constexpr uint32_t kCkptVersion = 1;

void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void save_checkpoint(const std::string& path, AnyModel<float>& model) {
    auto params = model.params();
    json header;
    header["config"] = {{"kind", model.cfg.kind},         {"n_sources", model.cfg.n_sources},
                        {"gamma_deg", model.cfg.gamma_deg}, {"mics", model.cfg.mics},
                        {"freq_bins", model.cfg.freq_bins}, {"ipd_dim", model.cfg.ipd_dim},
                        {"sharing", model.cfg.sharing}};
    json arrays = json::array();
    for (auto& [name, p] : params)
        arrays.push_back({{"name", name},
                          {"rows", static_cast<long>(p->w.rows())},
                          {"cols", static_cast<long>(p->w.cols())}});
    header["arrays"] = arrays;
    const std::string hs = header.dump();

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        DOALAB_CHECK(out.good(), "save_checkpoint: cannot open " + tmp);
        out.write(kMagic, 8);
        put_u32(out, kCkptVersion);
        put_u32(out, static_cast<uint32_t>(hs.size()));
        out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
        for (auto& [name, p] : params)
            out.write(reinterpret_cast<const char*>(p->w.data()),
                      static_cast<std::streamsize>(sizeof(float) * static_cast<size_t>(p->w.size())));
        DOALAB_CHECK(out.good(), "save_checkpoint: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

AnyModel<float> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    DOALAB_CHECK(in.good(), "load_checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    DOALAB_CHECK(in.good() && std::memcmp(magic, kMagic, 8) == 0,
                 "load_checkpoint: bad magic in " + path);
    const uint32_t version = get_u32(in);
    DOALAB_CHECK(version == kCkptVersion, "load_checkpoint: unsupported version");
    const uint32_t hlen = get_u32(in);
    std::string hs(hlen, '\0');
    in.read(hs.data(), hlen);
    DOALAB_CHECK(in.good(), "load_checkpoint: truncated header");
    json header = json::parse(hs);

    ModelConfig cfg;
    const json& jc = header.at("config");
    cfg.kind = jc.at("kind").get<std::string>();
    cfg.n_sources = jc.at("n_sources").get<int>();
    cfg.gamma_deg = jc.at("gamma_deg").get<double>();
    cfg.mics = jc.at("mics").get<int>();
    cfg.freq_bins = jc.at("freq_bins").get<int>();
    cfg.ipd_dim = jc.at("ipd_dim").get<int>();
    cfg.sharing = jc.at("sharing").get<int>();

    AnyModel<float> model = make_model<float>(cfg);
    auto params = model.params();
    const json& arrays = header.at("arrays");
    DOALAB_CHECK(arrays.size() == params.size(), "load_checkpoint: array count mismatch");
    for (size_t i = 0; i < params.size(); ++i) {
        auto& [name, p] = params[i];
        const json& a = arrays.at(i);
        DOALAB_CHECK(a.at("name").get<std::string>() == name,
                     "load_checkpoint: array name mismatch at " + name);
        DOALAB_CHECK(a.at("rows").get<long>() == p->w.rows() &&
                         a.at("cols").get<long>() == p->w.cols(),
                     "load_checkpoint: shape mismatch at " + name);
        in.read(reinterpret_cast<char*>(p->w.data()),
                static_cast<std::streamsize>(sizeof(float) * static_cast<size_t>(p->w.size())));
        DOALAB_CHECK(in.good(), "load_checkpoint: truncated data at " + name);
    }
    in.peek();
    DOALAB_CHECK(in.eof(), "load_checkpoint: trailing bytes in " + path);
    return model;
}

void Adam::attach(const NamedParams<float>& params) {
    t = 0;
    m.clear();
    v.clear();
    for (const auto& [name, p] : params) {
        m.push_back(Matf::Zero(p->w.rows(), p->w.cols()));
        v.push_back(Matf::Zero(p->w.rows(), p->w.cols()));
    }
}

void Adam::step(const NamedParams<float>& params) {
    DOALAB_CHECK(m.size() == params.size(), "Adam: not attached to these params");
    ++t;
    const float b1 = static_cast<float>(beta1), b2 = static_cast<float>(beta2);
    const float a = static_cast<float>(lr), e = static_cast<float>(eps);
    const float bc1 = 1.0f - std::pow(b1, static_cast<float>(t));
    const float bc2 = 1.0f - std::pow(b2, static_cast<float>(t));
    for (size_t i = 0; i < params.size(); ++i) {
        const Matf& g = params[i].second->g;
        m[i] = b1 * m[i] + (1.0f - b1) * g;
        v[i] = b2 * v[i] + (1.0f - b2) * g.cwiseProduct(g);
        params[i].second->w.noalias() -=
            (a * (m[i] / bc1).array() / ((v[i] / bc2).array().sqrt() + e)).matrix();
    }
}

int ipd_width(const ArrayGeometry& g, int freq_bins) {
    return 2 * static_cast<int>(g.ipd_pairs.size()) * freq_bins + freq_bins;
}

Matf model_features(const ModelConfig& cfg, const MultichannelSpectrogram& s,
                    const ArrayGeometry& g) {
    if (cfg.wants_ipd()) return ipd_features(s, g);
    return phase_features(s);
}

namespace {

std::vector<int> quantize_all(const AngularGrid& grid, const std::vector<double>& doas_deg) {
    std::vector<int> out;
    out.reserve(doas_deg.size());
    for (double d : doas_deg) out.push_back(grid.quantize_deg(d));
    return out;
}

// loss (and optionally gradients) for one example given its posteriors
double posts_loss(AnyModel<float>& model, const std::vector<Vec<float>>& posts,
                  const std::vector<double>& doas_deg, LossKind loss, bool pit,
                  const AngularGrid& grid, float grad_scale, bool backprop) {
    if (model.cfg.kind == "mlc") {
        DOALAB_CHECK(loss == LossKind::Bce, "mlc trains with bce only");
        const Vec<float> t = multi_hot<float>(quantize_all(grid, doas_deg), grid.size);
        const double value = bce_loss(posts[0], t);
        if (backprop) {
            Vec<float> d = bce_grad(posts[0], t) * grad_scale;
            model.backward({d});
        }
        return value;
    }

    const int n = static_cast<int>(posts.size());
    DOALAB_CHECK(static_cast<int>(doas_deg.size()) == n,
                 "posts_loss: source count mismatch");
    std::vector<Vec<float>> targets;
    if (pit) {
        for (double d : doas_deg)
            targets.push_back(make_target<float>(loss, grid.quantize_deg(d), grid.size));
        Mat<float> pair(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                pair(i, j) = loss_value(loss, posts[static_cast<size_t>(i)],
                                        targets[static_cast<size_t>(j)]);
        const PitResult pr = pit_loss(pair);
        if (backprop) {
            std::vector<Vec<float>> grads(static_cast<size_t>(n));
            for (int j = 0; j < n; ++j) {
                const int i = pr.perm[static_cast<size_t>(j)];
                grads[static_cast<size_t>(i)] =
                    loss_grad(loss, posts[static_cast<size_t>(i)],
                              targets[static_cast<size_t>(j)]) *
                    grad_scale;
            }
            model.backward(grads);
        }
        return pr.loss;
    }

    const std::vector<double> sorted = fixed_order_targets(doas_deg);
    for (double d : sorted)
        targets.push_back(make_target<float>(loss, grid.quantize_deg(d), grid.size));
    double value = 0.0;
    std::vector<Vec<float>> grads(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const size_t s = static_cast<size_t>(i);
        value += loss_value(loss, posts[s], targets[s]);
        if (backprop) grads[s] = loss_grad(loss, posts[s], targets[s]) * grad_scale;
    }
    if (backprop) model.backward(grads);
    return value;
}

std::vector<double> decode_from_posts(const AnyModel<float>& model,
                                      const std::vector<Vec<float>>& posts,
                                      const AngularGrid& grid, int n_sources) {
    if (model.cfg.kind == "mlc") return decode_mlc(posts[0], grid, n_sources);
    return decode_posteriors(posts, grid);
}

struct CachedAudio {
    std::vector<std::vector<float>> ch;
    double sr = 0.0;
    std::vector<double> doas_deg;
};

CachedAudio cache_example(const std::string& dir, const ManifestRecord& rec) {
    const Waveform w = wav_read(dir + "/" + rec.mixture);
    CachedAudio out;
    out.sr = w.sample_rate;
    out.doas_deg = rec.doas_deg;
    out.ch.resize(w.channels.size());
    for (size_t m = 0; m < w.channels.size(); ++m) {
        out.ch[m].resize(w.channels[m].size());
        for (size_t i = 0; i < w.channels[m].size(); ++i)
            out.ch[m][i] = static_cast<float>(w.channels[m][i]);
    }
    return out;
}

Waveform crop_audio(const CachedAudio& a, size_t start, size_t len) {
    Waveform w;
    w.sample_rate = a.sr;
    w.channels.resize(a.ch.size());
    for (size_t m = 0; m < a.ch.size(); ++m) {
        w.channels[m].resize(len);
        for (size_t i = 0; i < len; ++i)
            w.channels[m][i] = static_cast<double>(a.ch[m][start + i]);
    }
    return w;
}

void shuffle_indices(std::vector<size_t>& idx, Rng& rng) {
    for (size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[static_cast<size_t>(rng.uniform_int(i))]);
}

DatasetManifest read_split(const std::string& dir, const char* split, int cap) {
    DatasetManifest m = manifest_read(dir + "/" + split + ".jsonl");
    if (cap > 0 && static_cast<int>(m.size()) > cap) m.resize(static_cast<size_t>(cap));
    return m;
}

}  // namespace

TrainResult train(const ModelConfig& mc, const TrainConfig& tc) {
    DOALAB_CHECK(tc.epochs >= 1 && tc.batch >= 1, "train: bad schedule");
    DOALAB_CHECK(!tc.data_dir.empty(), "train: data_dir unset");
    const ArrayGeometry geo = ArrayGeometry::by_name(tc.geometry);
    DOALAB_CHECK(geo.num_mics() == mc.mics, "train: geometry does not match model mics");

    ModelConfig cfg = mc;
    if (cfg.wants_ipd() && cfg.ipd_dim == 0) cfg.ipd_dim = ipd_width(geo, cfg.freq_bins);
    const AngularGrid grid(cfg.gamma_deg);

    TrainResult res;
    res.model = make_model<float>(cfg);
    res.model.init(derive_seed(tc.seed, 0xA11));
    auto params = res.model.params();

    Adam opt;
    opt.lr = tc.lr;
    opt.attach(params);

    const DatasetManifest train_recs = read_split(tc.data_dir, "train", tc.max_train);
    const DatasetManifest dev_recs = read_split(tc.data_dir, "dev", tc.max_dev);
    DOALAB_CHECK(!train_recs.empty(), "train: empty training split");

    std::vector<CachedAudio> audio;
    audio.reserve(train_recs.size());
    for (const auto& r : train_recs) audio.push_back(cache_example(tc.data_dir, r));

    // dev features are reused every epoch; full utterances, no crop
    std::vector<Matf> dev_feats;
    std::vector<std::vector<double>> dev_doas;
    for (const auto& r : dev_recs) {
        const Waveform w = wav_read(tc.data_dir + "/" + r.mixture);
        dev_feats.push_back(model_features(cfg, stft(w), geo));
        dev_doas.push_back(r.doas_deg);
    }

    std::ofstream log;
    if (!tc.log_csv.empty()) {
        log.open(tc.log_csv, std::ios::trunc);
        DOALAB_CHECK(log.good(), "train: cannot open log " + tc.log_csv);
        log << "epoch,train_loss,dev_loss,dev_mae_deg\n";
    }

    const size_t n = audio.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        Rng order_rng(derive_seed(derive_seed(tc.seed, 0xE0), static_cast<uint64_t>(epoch)));
        shuffle_indices(order, order_rng);

        double epoch_loss = 0.0;
        for (size_t b0 = 0; b0 < n; b0 += static_cast<size_t>(tc.batch)) {
            const size_t b1 = std::min(n, b0 + static_cast<size_t>(tc.batch));
            const float scale = 1.0f / static_cast<float>(b1 - b0);
            res.model.zero_grads();
            for (size_t bi = b0; bi < b1; ++bi) {
                const size_t id = order[bi];
                const CachedAudio& a = audio[id];
                const size_t total = a.ch.empty() ? 0 : a.ch[0].size();
                size_t crop = static_cast<size_t>(tc.crop_s * a.sr + 0.5);
                size_t start = 0;
                if (crop == 0 || crop >= total) {
                    crop = total;
                } else {
                    Rng crop_rng(derive_seed(
                        derive_seed(derive_seed(tc.seed, 0xC0), static_cast<uint64_t>(epoch)),
                        static_cast<uint64_t>(id)));
                    start = static_cast<size_t>(crop_rng.uniform_int(total - crop + 1));
                }
                const Waveform w = crop_audio(a, start, crop);
                const Matf feats = model_features(cfg, stft(w), geo);
                const auto posts = res.model.forward(feats);
                epoch_loss += posts_loss(res.model, posts, a.doas_deg, tc.loss, tc.pit, grid,
                                         scale, true);
            }
            opt.step(params);
        }
        epoch_loss /= static_cast<double>(n);
        DOALAB_CHECK(std::isfinite(epoch_loss), "train: loss diverged");
        res.train_loss.push_back(epoch_loss);

        double dl = std::numeric_limits<double>::quiet_NaN();
        double dmae = std::numeric_limits<double>::quiet_NaN();
        if (!dev_feats.empty()) {
            double loss_sum = 0.0, mae_sum = 0.0;
            for (size_t i = 0; i < dev_feats.size(); ++i) {
                const auto posts = res.model.forward(dev_feats[i]);
                loss_sum += posts_loss(res.model, posts, dev_doas[i], tc.loss, tc.pit, grid,
                                       0.0f, false);
                const auto pred = decode_from_posts(res.model, posts, grid,
                                                    static_cast<int>(dev_doas[i].size()));
                mae_sum += cyclic_mae(pred, dev_doas[i]);
            }
            dl = loss_sum / static_cast<double>(dev_feats.size());
            dmae = mae_sum / static_cast<double>(dev_feats.size());
            DOALAB_CHECK(std::isfinite(dl), "train: dev loss diverged");
        }
        res.dev_loss.push_back(dl);
        res.dev_mae.push_back(dmae);

        if (log.is_open()) {
            char row[160];
            std::snprintf(row, sizeof(row), "%d,%.6f,%.6f,%.3f\n", epoch + 1, epoch_loss, dl,
                          dmae);
            log << row;
            log.flush();
        }
    }
    return res;
}

std::vector<double> estimate_angles(AnyModel<float>& model, const Waveform& mix,
                                    const ArrayGeometry& g) {
    const AngularGrid grid(model.cfg.gamma_deg);
    const Matf feats = model_features(model.cfg, stft(mix), g);
    const auto posts = model.forward(feats);
    return decode_from_posts(model, posts, grid, model.cfg.n_sources);
}

double circular_median_deg(const std::vector<double>& angles_deg) {
    DOALAB_CHECK(!angles_deg.empty(), "circular_median_deg: empty input");
    double best = angles_deg[0];
    double best_cost = std::numeric_limits<double>::infinity();
    for (double c : angles_deg) {
        double cost = 0.0;
        for (double a : angles_deg) cost += cyclic_diff_deg(c, a);
        if (cost < best_cost - 1e-12 ||
            (std::abs(cost - best_cost) <= 1e-12 && c < best)) {
            best_cost = cost;
            best = c;
        }
    }
    return best;
}

std::vector<double> chunked_estimate_angles(AnyModel<float>& model, const Waveform& mix,
                                            const ArrayGeometry& g) {
    const size_t chunk = static_cast<size_t>(0.1 * mix.sample_rate + 0.5);
    const size_t hop = chunk / 2;
    const size_t total = mix.num_samples();
    if (total < chunk) return estimate_angles(model, mix, g);

    std::vector<std::vector<double>> per_slot(static_cast<size_t>(model.cfg.n_sources));
    for (size_t start = 0; start + chunk <= total; start += hop) {
        Waveform piece;
        piece.sample_rate = mix.sample_rate;
        piece.channels.resize(mix.channels.size());
        for (size_t m = 0; m < mix.channels.size(); ++m)
            piece.channels[m].assign(mix.channels[m].begin() + static_cast<long>(start),
                                     mix.channels[m].begin() + static_cast<long>(start + chunk));
        std::vector<double> est = estimate_angles(model, piece, g);
        std::sort(est.begin(), est.end());
        for (size_t i = 0; i < est.size() && i < per_slot.size(); ++i)
            per_slot[i].push_back(est[i]);
    }
    std::vector<double> out;
    for (const auto& slot : per_slot)
        if (!slot.empty()) out.push_back(circular_median_deg(slot));
    return out;
}

}  // namespace doalab::neural
