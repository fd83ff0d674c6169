#pragma once

#include <string>
#include <variant>
#include <vector>

#include "doalab/geometry.hpp"
#include "doalab/neural/layers.hpp"

namespace doalab::neural {

struct ModelConfig {
    std::string kind = "mlc";  // mlc | mask_split | map_split_c | map_split_r
    int n_sources = 2;
    double gamma_deg = 10.0;
    int mics = 8;
    int freq_bins = 257;
    int ipd_dim = 0;   // map_split_r input width, 2*I*F + F
    int sharing = -1;  // -1 = default by kind, else 0 | 1

    int grid_classes() const { return static_cast<int>(360.0 / gamma_deg); }
    int hidden() const { return 2 * grid_classes(); }
    bool predictor_sharing() const {
        if (sharing >= 0) return sharing != 0;
        return kind == "map_split_c";
    }
    bool wants_ipd() const { return kind == "map_split_r"; }
    void validate() const;
};

// Three valid conv blocks collapse the mic axis to one, then a per-frame
// feedforward layer maps the flattened maps to Q.
template <class S>
struct LocNetCnn {
    Conv2d<S> c1, c2, c3;
    Relu<S> r1, r2, r3;
    Dense<S> ff;

    void configure(int mics, int f, int q) {
        if (mics == 8) {
            c1.configure(1, 8, f, 4, 4, 1);
            c2.configure(4, 5, f, 16, 3, 3);
            c3.configure(16, 3, f - 2, 32, 3, 3);
        } else if (mics == 3) {
            c1.configure(1, 3, f, 4, 2, 1);
            c2.configure(4, 2, f, 16, 2, 3);
            c3.configure(16, 1, f - 2, 32, 1, 3);
        } else {
            throw Error("LocNetCnn: kernel set defined for 3 or 8 mics only");
        }
        DOALAB_CHECK(c3.oh() == 1, "LocNetCnn: mic axis failed to collapse");
        ff.configure(32 * (f - 4), q);
    }
    void init(Rng& rng) {
        c1.init(rng);
        c2.init(rng);
        c3.init(rng);
        ff.init(rng);
    }
    Mat<S> forward(const Mat<S>& phase) {
        return ff.forward(r3.forward(c3.forward(r2.forward(
            c2.forward(r1.forward(c1.forward(phase)))))));
    }
    Mat<S> backward(const Mat<S>& dz) {
        return c1.backward(r1.backward(c2.backward(r2.backward(
            c3.backward(r3.backward(ff.backward(dz)))))));
    }
    void collect(NamedParams<S>& out) {
        out.push_back({"cnn.conv1.kernel", &c1.kernel});
        out.push_back({"cnn.conv1.bias", &c1.bias});
        out.push_back({"cnn.conv2.kernel", &c2.kernel});
        out.push_back({"cnn.conv2.bias", &c2.bias});
        out.push_back({"cnn.conv3.kernel", &c3.kernel});
        out.push_back({"cnn.conv3.bias", &c3.bias});
        out.push_back({"cnn.ff.weight", &ff.weight});
        out.push_back({"cnn.ff.bias", &ff.bias});
    }
};

// kappa = sigmoid(A2(mean_t ReLU(A1(Z)))), one multi-label vector
template <class S>
struct MlcModel {
    LocNetCnn<S> cnn;
    Dense<S> a1, a2;
    Relu<S> relu;
    TimeMean<S> mean;
    Sigmoid<S> sig;

    void configure(const ModelConfig& cfg) {
        const int q = cfg.hidden();
        cnn.configure(cfg.mics, cfg.freq_bins, q);
        a1.configure(q, q);
        a2.configure(q, cfg.grid_classes());
    }
    void init(Rng& rng) {
        cnn.init(rng);
        a1.init(rng);
        a2.init(rng);
    }
    std::vector<Vec<S>> forward(const Mat<S>& x) {
        const Mat<S> kappa =
            sig.forward(a2.forward(mean.forward(relu.forward(a1.forward(cnn.forward(x))))));
        return {kappa.row(0).transpose()};
    }
    void backward(const std::vector<Vec<S>>& d) {
        Mat<S> dk = d[0].transpose();
        cnn.backward(a1.backward(relu.backward(mean.backward(a2.backward(sig.backward(dk))))));
    }
    void collect(NamedParams<S>& out) {
        cnn.collect(out);
        out.push_back({"head.a1.weight", &a1.weight});
        out.push_back({"head.a1.bias", &a1.bias});
        out.push_back({"head.a2.weight", &a2.weight});
        out.push_back({"head.a2.bias", &a2.bias});
    }
};

// per-source ReLU branch and time mean, then a predictor (shared by default)
template <class S>
struct MapSplitCModel {
    LocNetCnn<S> cnn;
    std::vector<Dense<S>> a1;
    std::vector<Relu<S>> relu;
    std::vector<TimeMean<S>> mean;
    bool shared = true;
    Dense<S> pred_shared;
    std::vector<Dense<S>> pred;
    Softmax<S> soft;
    int n = 0, q = 0, k = 0;

    void configure(const ModelConfig& cfg) {
        n = cfg.n_sources;
        q = cfg.hidden();
        k = cfg.grid_classes();
        shared = cfg.predictor_sharing();
        cnn.configure(cfg.mics, cfg.freq_bins, q);
        a1.resize(static_cast<size_t>(n));
        relu.resize(static_cast<size_t>(n));
        mean.resize(static_cast<size_t>(n));
        for (auto& d : a1) d.configure(q, q);
        if (shared) {
            pred_shared.configure(q, k);
        } else {
            pred.resize(static_cast<size_t>(n));
            for (auto& d : pred) d.configure(q, k);
        }
    }
    void init(Rng& rng) {
        cnn.init(rng);
        for (auto& d : a1) d.init(rng);
        if (shared)
            pred_shared.init(rng);
        else
            for (auto& d : pred) d.init(rng);
    }
    std::vector<Vec<S>> forward(const Mat<S>& x) {
        const Mat<S> z = cnn.forward(x);
        Mat<S> xi(n, q);
        for (int i = 0; i < n; ++i) {
            const size_t s = static_cast<size_t>(i);
            xi.row(i) = mean[s].forward(relu[s].forward(a1[s].forward(z))).row(0);
        }
        Mat<S> logits(n, k);
        if (shared) {
            logits = pred_shared.forward(xi);
        } else {
            for (int i = 0; i < n; ++i)
                logits.row(i) = pred[static_cast<size_t>(i)].forward(xi.row(i)).row(0);
        }
        const Mat<S> p = soft.forward(logits);
        std::vector<Vec<S>> out;
        for (int i = 0; i < n; ++i) out.push_back(p.row(i).transpose());
        return out;
    }
    void backward(const std::vector<Vec<S>>& d) {
        Mat<S> dp(n, k);
        for (int i = 0; i < n; ++i) dp.row(i) = d[static_cast<size_t>(i)].transpose();
        const Mat<S> dlogits = soft.backward(dp);
        Mat<S> dxi(n, q);
        if (shared) {
            dxi = pred_shared.backward(dlogits);
        } else {
            for (int i = 0; i < n; ++i)
                dxi.row(i) = pred[static_cast<size_t>(i)].backward(dlogits.row(i)).row(0);
        }
        Mat<S> dz;
        for (int i = 0; i < n; ++i) {
            const size_t s = static_cast<size_t>(i);
            const Mat<S> dzi =
                a1[s].backward(relu[s].backward(mean[s].backward(dxi.row(i))));
            if (i == 0)
                dz = dzi;
            else
                dz += dzi;
        }
        cnn.backward(dz);
    }
    void collect(NamedParams<S>& out) {
        cnn.collect(out);
        for (int i = 0; i < n; ++i) {
            const std::string p = "head.a1." + std::to_string(i);
            out.push_back({p + ".weight", &a1[static_cast<size_t>(i)].weight});
            out.push_back({p + ".bias", &a1[static_cast<size_t>(i)].bias});
        }
        if (shared) {
            out.push_back({"head.pred.weight", &pred_shared.weight});
            out.push_back({"head.pred.bias", &pred_shared.bias});
        } else {
            for (int i = 0; i < n; ++i) {
                const std::string p = "head.pred." + std::to_string(i);
                out.push_back({p + ".weight", &pred[static_cast<size_t>(i)].weight});
                out.push_back({p + ".bias", &pred[static_cast<size_t>(i)].bias});
            }
        }
    }
};

// recurrent masks over Z, masked means, per-source predictors (not shared
// by default)
template <class S>
struct MaskSplitModel {
    LocNetCnn<S> cnn;
    Blstmp<S> rnn;
    Dense<S> mask_affine;
    Sigmoid<S> sig;
    std::vector<MaskedMean<S>> mm;
    bool shared = false;
    Dense<S> pred_shared;
    std::vector<Dense<S>> pred;
    Softmax<S> soft;
    Mat<S> z_;
    int n = 0, q = 0, k = 0;

    void configure(const ModelConfig& cfg) {
        n = cfg.n_sources;
        q = cfg.hidden();
        k = cfg.grid_classes();
        shared = cfg.predictor_sharing();
        cnn.configure(cfg.mics, cfg.freq_bins, q);
        rnn.configure(q, q);
        mask_affine.configure(2 * q, n * q);
        mm.resize(static_cast<size_t>(n));
        if (shared) {
            pred_shared.configure(q, k);
        } else {
            pred.resize(static_cast<size_t>(n));
            for (auto& d : pred) d.configure(q, k);
        }
    }
    void init(Rng& rng) {
        cnn.init(rng);
        rnn.init(rng);
        mask_affine.init(rng);
        if (shared)
            pred_shared.init(rng);
        else
            for (auto& d : pred) d.init(rng);
    }
    std::vector<Vec<S>> forward(const Mat<S>& x) {
        z_ = cnn.forward(x);
        const Mat<S> wbig = sig.forward(mask_affine.forward(rnn.forward(z_)));
        Mat<S> xi(n, q);
        for (int i = 0; i < n; ++i) {
            const Mat<S> wn = wbig.middleCols(static_cast<Eigen::Index>(i) * q, q);
            xi.row(i) = mm[static_cast<size_t>(i)].forward(wn, z_).row(0);
        }
        Mat<S> logits(n, k);
        if (shared) {
            logits = pred_shared.forward(xi);
        } else {
            for (int i = 0; i < n; ++i)
                logits.row(i) = pred[static_cast<size_t>(i)].forward(xi.row(i)).row(0);
        }
        const Mat<S> p = soft.forward(logits);
        std::vector<Vec<S>> out;
        for (int i = 0; i < n; ++i) out.push_back(p.row(i).transpose());
        return out;
    }
    void backward(const std::vector<Vec<S>>& d) {
        Mat<S> dp(n, k);
        for (int i = 0; i < n; ++i) dp.row(i) = d[static_cast<size_t>(i)].transpose();
        const Mat<S> dlogits = soft.backward(dp);
        Mat<S> dxi(n, q);
        if (shared) {
            dxi = pred_shared.backward(dlogits);
        } else {
            for (int i = 0; i < n; ++i)
                dxi.row(i) = pred[static_cast<size_t>(i)].backward(dlogits.row(i)).row(0);
        }
        Mat<S> dwbig = Mat<S>::Zero(z_.rows(), static_cast<Eigen::Index>(n) * q);
        Mat<S> dz_mask = Mat<S>::Zero(z_.rows(), q);
        for (int i = 0; i < n; ++i) {
            auto [dw, dz] = mm[static_cast<size_t>(i)].backward(dxi.row(i));
            dwbig.middleCols(static_cast<Eigen::Index>(i) * q, q) = dw;
            dz_mask += dz;
        }
        const Mat<S> dz_rnn = rnn.backward(mask_affine.backward(sig.backward(dwbig)));
        cnn.backward(dz_mask + dz_rnn);
    }
    void collect(NamedParams<S>& out) {
        cnn.collect(out);
        collect_rnn(out, rnn);
        out.push_back({"mask.weight", &mask_affine.weight});
        out.push_back({"mask.bias", &mask_affine.bias});
        collect_preds(out);
    }
    void collect_preds(NamedParams<S>& out) {
        if (shared) {
            out.push_back({"pred.weight", &pred_shared.weight});
            out.push_back({"pred.bias", &pred_shared.bias});
        } else {
            for (int i = 0; i < n; ++i) {
                const std::string p = "pred." + std::to_string(i);
                out.push_back({p + ".weight", &pred[static_cast<size_t>(i)].weight});
                out.push_back({p + ".bias", &pred[static_cast<size_t>(i)].bias});
            }
        }
    }
    static void collect_rnn(NamedParams<S>& out, Blstmp<S>& r) {
        out.push_back({"rnn.fwd.wx", &r.fwd.wx});
        out.push_back({"rnn.fwd.wh", &r.fwd.wh});
        out.push_back({"rnn.fwd.b", &r.fwd.b});
        out.push_back({"rnn.bwd.wx", &r.bwd.wx});
        out.push_back({"rnn.bwd.wh", &r.bwd.wh});
        out.push_back({"rnn.bwd.b", &r.bwd.b});
        out.push_back({"rnn.proj_f.weight", &r.proj_f.weight});
        out.push_back({"rnn.proj_f.bias", &r.proj_f.bias});
        out.push_back({"rnn.proj_b.weight", &r.proj_b.weight});
        out.push_back({"rnn.proj_b.bias", &r.proj_b.bias});
    }
};

// recurrent splitter straight from IPD features; sigmoid maps, time means,
// per-source predictors (not shared by default)
template <class S>
struct MapSplitRModel {
    Blstmp<S> rnn;
    Dense<S> map_affine;
    Sigmoid<S> sig;
    std::vector<TimeMean<S>> mean;
    bool shared = false;
    Dense<S> pred_shared;
    std::vector<Dense<S>> pred;
    Softmax<S> soft;
    int n = 0, q = 0, k = 0;

    void configure(const ModelConfig& cfg) {
        DOALAB_CHECK(cfg.ipd_dim > 0, "map_split_r: ipd feature width unset");
        n = cfg.n_sources;
        q = cfg.hidden();
        k = cfg.grid_classes();
        shared = cfg.predictor_sharing();
        rnn.configure(cfg.ipd_dim, q);
        map_affine.configure(2 * q, n * q);
        mean.resize(static_cast<size_t>(n));
        if (shared) {
            pred_shared.configure(q, k);
        } else {
            pred.resize(static_cast<size_t>(n));
            for (auto& d : pred) d.configure(q, k);
        }
    }
    void init(Rng& rng) {
        rnn.init(rng);
        map_affine.init(rng);
        if (shared)
            pred_shared.init(rng);
        else
            for (auto& d : pred) d.init(rng);
    }
    std::vector<Vec<S>> forward(const Mat<S>& x) {
        const Mat<S> wbig = sig.forward(map_affine.forward(rnn.forward(x)));
        Mat<S> xi(n, q);
        for (int i = 0; i < n; ++i) {
            const Mat<S> wn = wbig.middleCols(static_cast<Eigen::Index>(i) * q, q);
            xi.row(i) = mean[static_cast<size_t>(i)].forward(wn).row(0);
        }
        Mat<S> logits(n, k);
        if (shared) {
            logits = pred_shared.forward(xi);
        } else {
            for (int i = 0; i < n; ++i)
                logits.row(i) = pred[static_cast<size_t>(i)].forward(xi.row(i)).row(0);
        }
        const Mat<S> p = soft.forward(logits);
        std::vector<Vec<S>> out;
        for (int i = 0; i < n; ++i) out.push_back(p.row(i).transpose());
        return out;
    }
    void backward(const std::vector<Vec<S>>& d) {
        Mat<S> dp(n, k);
        for (int i = 0; i < n; ++i) dp.row(i) = d[static_cast<size_t>(i)].transpose();
        const Mat<S> dlogits = soft.backward(dp);
        Mat<S> dxi(n, q);
        if (shared) {
            dxi = pred_shared.backward(dlogits);
        } else {
            for (int i = 0; i < n; ++i)
                dxi.row(i) = pred[static_cast<size_t>(i)].backward(dlogits.row(i)).row(0);
        }
        Mat<S> dwbig(sig.y_.rows(), static_cast<Eigen::Index>(n) * q);
        for (int i = 0; i < n; ++i)
            dwbig.middleCols(static_cast<Eigen::Index>(i) * q, q) =
                mean[static_cast<size_t>(i)].backward(dxi.row(i));
        rnn.backward(map_affine.backward(sig.backward(dwbig)));
    }
    void collect(NamedParams<S>& out) {
        MaskSplitModel<S>::collect_rnn(out, rnn);
        out.push_back({"map.weight", &map_affine.weight});
        out.push_back({"map.bias", &map_affine.bias});
        if (shared) {
            out.push_back({"pred.weight", &pred_shared.weight});
            out.push_back({"pred.bias", &pred_shared.bias});
        } else {
            for (int i = 0; i < n; ++i) {
                const std::string p = "pred." + std::to_string(i);
                out.push_back({p + ".weight", &pred[static_cast<size_t>(i)].weight});
                out.push_back({p + ".bias", &pred[static_cast<size_t>(i)].bias});
            }
        }
    }
};

template <class S>
struct AnyModel {
    ModelConfig cfg;
    std::variant<MlcModel<S>, MapSplitCModel<S>, MaskSplitModel<S>, MapSplitRModel<S>> net;

    std::vector<Vec<S>> forward(const Mat<S>& x) {
        return std::visit([&](auto& m) { return m.forward(x); }, net);
    }
    void backward(const std::vector<Vec<S>>& d) {
        std::visit([&](auto& m) { m.backward(d); }, net);
    }
    NamedParams<S> params() {
        NamedParams<S> out;
        std::visit([&](auto& m) { m.collect(out); }, net);
        return out;
    }
    void zero_grads() {
        for (auto& [name, p] : params()) p->zero_grad();
    }
    void init(uint64_t seed) {
        Rng rng(seed);
        std::visit([&](auto& m) { m.init(rng); }, net);
    }
};

template <class S>
AnyModel<S> make_model(const ModelConfig& cfg) {
    cfg.validate();
    AnyModel<S> m;
    m.cfg = cfg;
    if (cfg.kind == "mlc") {
        m.net.template emplace<MlcModel<S>>().configure(cfg);
    } else if (cfg.kind == "map_split_c") {
        m.net.template emplace<MapSplitCModel<S>>().configure(cfg);
    } else if (cfg.kind == "mask_split") {
        m.net.template emplace<MaskSplitModel<S>>().configure(cfg);
    } else if (cfg.kind == "map_split_r") {
        m.net.template emplace<MapSplitRModel<S>>().configure(cfg);
    } else {
        throw Error("make_model: unknown kind '" + cfg.kind + "'");
    }
    return m;
}

// argmax per posterior, ties to the lowest class index
std::vector<double> decode_posteriors(const std::vector<Vec<float>>& posts,
                                      const AngularGrid& grid);

// peak picking over the multi-label vector, same semantics as the spatial
// spectrum peak picker
std::vector<double> decode_mlc(const Vec<float>& kappa, const AngularGrid& grid, int n);

}  // namespace doalab::neural
