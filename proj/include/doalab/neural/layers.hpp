#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "doalab/common.hpp"
#include "doalab/neural/tensor.hpp"
#include "doalab/rng.hpp"

namespace doalab::neural {

template <class S>
struct Param {
    Mat<S> w, g;

    void resize(Eigen::Index rows, Eigen::Index cols) {
        w.setZero(rows, cols);
        g.setZero(rows, cols);
    }
    void zero_grad() { g.setZero(); }
    Eigen::Index count() const { return w.size(); }
};

template <class S>
using NamedParams = std::vector<std::pair<std::string, Param<S>*>>;

template <class S>
void init_uniform(Param<S>& p, int fan_in, Rng& rng) {
    const double lim = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < p.w.rows(); ++i)
        for (Eigen::Index j = 0; j < p.w.cols(); ++j)
            p.w(i, j) = static_cast<S>(rng.uniform(-lim, lim));
}

// y = x W^T + b, rows are independent examples
template <class S>
struct Dense {
    Param<S> weight;  // out x in
    Param<S> bias;    // 1 x out
    Mat<S> x_;        // cache

    void configure(int in, int out) {
        weight.resize(out, in);
        bias.resize(1, out);
    }
    void init(Rng& rng) { init_uniform(weight, static_cast<int>(weight.w.cols()), rng); }

    Mat<S> forward(const Mat<S>& x) {
        DOALAB_CHECK(x.cols() == weight.w.cols(), "Dense: input width mismatch");
        x_ = x;
        Mat<S> y = x * weight.w.transpose();
        y.rowwise() += bias.w.row(0);
        return y;
    }
    Mat<S> backward(const Mat<S>& dy) {
        weight.g.noalias() += dy.transpose() * x_;
        bias.g.row(0) += dy.colwise().sum();
        return dy * weight.w;
    }
};

template <class S>
struct Relu {
    Mat<S> x_;
    Mat<S> forward(const Mat<S>& x) {
        x_ = x;
        return x.cwiseMax(S(0));
    }
    Mat<S> backward(const Mat<S>& dy) {
        return ((x_.array() > S(0)).template cast<S>() * dy.array()).matrix();
    }
};

template <class S>
struct Sigmoid {
    Mat<S> y_;
    Mat<S> forward(const Mat<S>& x) {
        y_ = (((-x.array()).exp() + S(1)).inverse()).matrix();
        return y_;
    }
    Mat<S> backward(const Mat<S>& dy) {
        return (dy.array() * y_.array() * (S(1) - y_.array())).matrix();
    }
};

// row-wise softmax
template <class S>
struct Softmax {
    Mat<S> y_;
    Mat<S> forward(const Mat<S>& x) {
        Mat<S> shifted = x;
        shifted.colwise() -= x.rowwise().maxCoeff();
        y_ = shifted.array().exp().matrix();
        for (Eigen::Index r = 0; r < y_.rows(); ++r) y_.row(r) /= y_.row(r).sum();
        return y_;
    }
    Mat<S> backward(const Mat<S>& dy) {
        Mat<S> dx = (y_.array() * dy.array()).matrix();
        for (Eigen::Index r = 0; r < dx.rows(); ++r) dx.row(r).array() -= y_.row(r).array() * dx.row(r).sum();
        return dx;
    }
};

// Per-frame valid 2D convolution; a row of x holds one frame as (c, h, w)
// flattened c-major. GEMM over im2col patches, frames stacked.
template <class S>
struct Conv2d {
    int cin = 0, h = 0, w = 0, cout = 0, kh = 0, kw = 0;
    Param<S> kernel;  // cout x (cin*kh*kw)
    Param<S> bias;    // 1 x cout
    Mat<S> cols_;     // (frames*oh*ow) x (cin*kh*kw)

    int oh() const { return h - kh + 1; }
    int ow() const { return w - kw + 1; }

    void configure(int cin_, int h_, int w_, int cout_, int kh_, int kw_) {
        cin = cin_; h = h_; w = w_; cout = cout_; kh = kh_; kw = kw_;
        DOALAB_CHECK(kh <= h && kw <= w, "Conv2d: kernel larger than input");
        kernel.resize(cout, cin * kh * kw);
        bias.resize(1, cout);
    }
    void init(Rng& rng) { init_uniform(kernel, cin * kh * kw, rng); }

    Mat<S> forward(const Mat<S>& x) {
        DOALAB_CHECK(x.cols() == static_cast<Eigen::Index>(cin) * h * w,
                     "Conv2d: input width mismatch");
        const Eigen::Index frames = x.rows();
        const int patch = cin * kh * kw;
        cols_.resize(frames * oh() * ow(), patch);
        for (Eigen::Index t = 0; t < frames; ++t) {
            const S* f = x.row(t).data();
            Eigen::Index r = t * oh() * ow();
            for (int i = 0; i < oh(); ++i)
                for (int j = 0; j < ow(); ++j, ++r) {
                    S* dst = cols_.row(r).data();
                    for (int c = 0; c < cin; ++c)
                        for (int a = 0; a < kh; ++a)
                            for (int b = 0; b < kw; ++b)
                                *dst++ = f[(c * h + i + a) * w + j + b];
                }
        }
        Mat<S> patches = cols_ * kernel.w.transpose();  // (frames*oh*ow) x cout
        patches.rowwise() += bias.w.row(0);
        // repack rows to frames x (cout, oh, ow)
        Mat<S> y(frames, static_cast<Eigen::Index>(cout) * oh() * ow());
        for (Eigen::Index t = 0; t < frames; ++t)
            for (int i = 0; i < oh(); ++i)
                for (int j = 0; j < ow(); ++j)
                    for (int c = 0; c < cout; ++c)
                        y(t, (c * oh() + i) * ow() + j) =
                            patches(t * oh() * ow() + i * ow() + j, c);
        return y;
    }

    Mat<S> backward(const Mat<S>& dy) {
        const Eigen::Index frames = dy.rows();
        Mat<S> dpatch(frames * oh() * ow(), cout);
        for (Eigen::Index t = 0; t < frames; ++t)
            for (int i = 0; i < oh(); ++i)
                for (int j = 0; j < ow(); ++j)
                    for (int c = 0; c < cout; ++c)
                        dpatch(t * oh() * ow() + i * ow() + j, c) =
                            dy(t, (c * oh() + i) * ow() + j);
        kernel.g.noalias() += dpatch.transpose() * cols_;
        bias.g.row(0) += dpatch.colwise().sum();
        Mat<S> dcols = dpatch * kernel.w;  // back to patch space
        Mat<S> dx = Mat<S>::Zero(frames, static_cast<Eigen::Index>(cin) * h * w);
        for (Eigen::Index t = 0; t < frames; ++t) {
            S* f = dx.row(t).data();
            Eigen::Index r = t * oh() * ow();
            for (int i = 0; i < oh(); ++i)
                for (int j = 0; j < ow(); ++j, ++r) {
                    const S* src = dcols.row(r).data();
                    for (int c = 0; c < cin; ++c)
                        for (int a = 0; a < kh; ++a)
                            for (int b = 0; b < kw; ++b)
                                f[(c * h + i + a) * w + j + b] += *src++;
                }
        }
        return dx;
    }
};

// column mean over time: T x Q -> 1 x Q
template <class S>
struct TimeMean {
    Eigen::Index t_ = 0;
    Mat<S> forward(const Mat<S>& x) {
        DOALAB_CHECK(x.rows() >= 1, "TimeMean: empty input");
        t_ = x.rows();
        Mat<S> y(1, x.cols());
        y.row(0) = x.colwise().mean();
        return y;
    }
    Mat<S> backward(const Mat<S>& dy) {
        Mat<S> dx = (dy.row(0) / static_cast<S>(t_)).replicate(t_, 1);
        return dx;
    }
};

// xi_q = sum_t w z / (sum_t w + eps); the guard keeps an all-zero mask finite
template <class S>
struct MaskedMean {
    static constexpr double kEps = 1e-8;
    Mat<S> w_, z_, xi_;
    Row<S> denom_;

    Mat<S> forward(const Mat<S>& w, const Mat<S>& z) {
        DOALAB_CHECK(w.rows() == z.rows() && w.cols() == z.cols(), "MaskedMean: shape mismatch");
        w_ = w;
        z_ = z;
        denom_ = w.colwise().sum();
        denom_.array() += S(kEps);
        xi_.resize(1, w.cols());
        xi_.row(0) = w.cwiseProduct(z).colwise().sum();
        xi_.row(0).array() /= denom_.array();
        return xi_;
    }
    // returns (dw, dz)
    std::pair<Mat<S>, Mat<S>> backward(const Mat<S>& dxi) {
        Row<S> scale = dxi.row(0);
        scale.array() /= denom_.array();
        Mat<S> dz = (w_.array().rowwise() * scale.array()).matrix();
        Mat<S> centered = z_;
        centered.rowwise() -= xi_.row(0);
        Mat<S> dw = (centered.array().rowwise() * scale.array()).matrix();
        return {std::move(dw), std::move(dz)};
    }
};

// Plain LSTM, gate order (i, f, g, o); forget bias starts at 1
template <class S>
struct Lstm {
    int in = 0, q = 0;
    Param<S> wx;  // 4q x in
    Param<S> wh;  // 4q x q
    Param<S> b;   // 1 x 4q
    Mat<S> x_, i_, f_, g_, o_, c_, tc_, h_;

    void configure(int in_, int q_) {
        in = in_;
        q = q_;
        wx.resize(4 * q, in);
        wh.resize(4 * q, q);
        b.resize(1, 4 * q);
    }
    void init(Rng& rng) {
        init_uniform(wx, in, rng);
        init_uniform(wh, q, rng);
        b.w.setZero();
        b.w.row(0).segment(q, q).setConstant(S(1));  // forget gate
    }

    Mat<S> forward(const Mat<S>& x) {
        DOALAB_CHECK(x.cols() == in, "Lstm: input width mismatch");
        const Eigen::Index T = x.rows();
        x_ = x;
        Mat<S> pre = x * wx.w.transpose();
        pre.rowwise() += b.w.row(0);
        i_.resize(T, q); f_.resize(T, q); g_.resize(T, q); o_.resize(T, q);
        c_.resize(T, q); tc_.resize(T, q); h_.resize(T, q);
        Row<S> hprev = Row<S>::Zero(q);
        Row<S> cprev = Row<S>::Zero(q);
        for (Eigen::Index t = 0; t < T; ++t) {
            Row<S> z = pre.row(t) + hprev * wh.w.transpose();
            i_.row(t) = ((S(1) + (-z.segment(0, q).array()).exp()).inverse()).matrix();
            f_.row(t) = ((S(1) + (-z.segment(q, q).array()).exp()).inverse()).matrix();
            g_.row(t) = (z.segment(2 * q, q).array().tanh()).matrix();
            o_.row(t) = ((S(1) + (-z.segment(3 * q, q).array()).exp()).inverse()).matrix();
            c_.row(t) =
                (f_.row(t).array() * cprev.array() + i_.row(t).array() * g_.row(t).array())
                    .matrix();
            tc_.row(t) = (c_.row(t).array().tanh()).matrix();
            h_.row(t) = (o_.row(t).array() * tc_.row(t).array()).matrix();
            hprev = h_.row(t);
            cprev = c_.row(t);
        }
        return h_;
    }

    Mat<S> backward(const Mat<S>& dh_out) {
        const Eigen::Index T = x_.rows();
        Mat<S> dz(T, 4 * q);
        Row<S> dh_next = Row<S>::Zero(q);
        Row<S> dc_next = Row<S>::Zero(q);
        for (Eigen::Index t = T - 1; t >= 0; --t) {
            const Row<S> dh = dh_out.row(t) + dh_next;
            Row<S> dc =
                (dh.array() * o_.row(t).array() * (S(1) - tc_.row(t).array().square()) +
                 dc_next.array())
                    .matrix();
            const Row<S> cprev = t > 0 ? Row<S>(c_.row(t - 1)) : Row<S>(Row<S>::Zero(q));
            dz.row(t).segment(0, q) = (dc.array() * g_.row(t).array() * i_.row(t).array() *
                                       (S(1) - i_.row(t).array()))
                                          .matrix();
            dz.row(t).segment(q, q) = (dc.array() * cprev.array() * f_.row(t).array() *
                                       (S(1) - f_.row(t).array()))
                                          .matrix();
            dz.row(t).segment(2 * q, q) =
                (dc.array() * i_.row(t).array() * (S(1) - g_.row(t).array().square())).matrix();
            dz.row(t).segment(3 * q, q) = (dh.array() * tc_.row(t).array() * o_.row(t).array() *
                                           (S(1) - o_.row(t).array()))
                                              .matrix();
            dh_next = dz.row(t) * wh.w;
            dc_next = (dc.array() * f_.row(t).array()).matrix();
        }
        wx.g.noalias() += dz.transpose() * x_;
        for (Eigen::Index t = 1; t < T; ++t)
            wh.g.noalias() += dz.row(t).transpose() * h_.row(t - 1);
        b.g.row(0) += dz.colwise().sum();
        return dz * wx.w;
    }
};

// Bidirectional LSTM, each direction followed by its own projection, concat.
template <class S>
struct Blstmp {
    Lstm<S> fwd, bwd;
    Dense<S> proj_f, proj_b;

    void configure(int in, int q) {
        fwd.configure(in, q);
        bwd.configure(in, q);
        proj_f.configure(q, q);
        proj_b.configure(q, q);
    }
    void init(Rng& rng) {
        fwd.init(rng);
        bwd.init(rng);
        proj_f.init(rng);
        proj_b.init(rng);
    }

    Mat<S> forward(const Mat<S>& x) {
        const Eigen::Index T = x.rows();
        const Mat<S> rev_in = x.colwise().reverse();
        const Mat<S> hf = proj_f.forward(fwd.forward(x));
        const Mat<S> hb = proj_b.forward(bwd.forward(rev_in));
        Mat<S> y(T, hf.cols() * 2);
        y.leftCols(hf.cols()) = hf;
        y.rightCols(hf.cols()) = hb.colwise().reverse();
        return y;
    }
    Mat<S> backward(const Mat<S>& dy) {
        const Eigen::Index q = dy.cols() / 2;
        Mat<S> dx = fwd.backward(proj_f.backward(dy.leftCols(q)));
        const Mat<S> dhb = Mat<S>(dy.rightCols(q)).colwise().reverse();
        const Mat<S> dxb = bwd.backward(proj_b.backward(dhb));
        dx += dxb.colwise().reverse();
        return dx;
    }
};

}  // namespace doalab::neural
