#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "doalab/common.hpp"
#include "doalab/neural/tensor.hpp"

namespace doalab::neural {

enum class LossKind { Bce, Ce, Sce, Emd, Semd };

LossKind loss_from_name(const std::string& name);
const char* loss_name(LossKind k);

// CE and SCE differ only in the target; same for EMD and SEMD.
inline bool is_emd(LossKind k) { return k == LossKind::Emd || k == LossKind::Semd; }
inline bool is_soft(LossKind k) { return k == LossKind::Sce || k == LossKind::Semd; }

inline constexpr double kLogEps = 1e-12;

// Floored log keeps the loss exactly zero at p == t and non-negative
// everywhere; the floor only engages below kLogEps where the gradient is
// defined as zero.
template <class S>
S safe_log(S p) {
    return std::log(std::max(p, S(kLogEps)));
}

// -sum t log p
template <class S>
S ce_loss(const Vec<S>& p, const Vec<S>& t) {
    DOALAB_CHECK(p.size() == t.size(), "ce_loss: size mismatch");
    S loss = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) loss -= t(i) * safe_log(p(i));
    return loss;
}

template <class S>
Vec<S> ce_grad(const Vec<S>& p, const Vec<S>& t) {
    Vec<S> d(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i)
        d(i) = p(i) > S(kLogEps) ? -t(i) / p(i) : S(0);
    return d;
}

// mean over classes of binary cross-entropy against a multi-hot target
template <class S>
S bce_loss(const Vec<S>& p, const Vec<S>& t) {
    DOALAB_CHECK(p.size() == t.size(), "bce_loss: size mismatch");
    S loss = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        loss -= t(i) * safe_log(p(i)) + (S(1) - t(i)) * safe_log(S(1) - p(i));
    return loss / static_cast<S>(p.size());
}

template <class S>
Vec<S> bce_grad(const Vec<S>& p, const Vec<S>& t) {
    Vec<S> d(p.size());
    const S k = static_cast<S>(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const S a = p(i) > S(kLogEps) ? -t(i) / p(i) : S(0);
        const S b = S(1) - p(i) > S(kLogEps) ? (S(1) - t(i)) / (S(1) - p(i)) : S(0);
        d(i) = (a + b) / k;
    }
    return d;
}

// sum_i (cdf(p)_i - cdf(t)_i)^2
template <class S>
S emd_loss(const Vec<S>& p, const Vec<S>& t) {
    DOALAB_CHECK(p.size() == t.size(), "emd_loss: size mismatch");
    S cp = 0, ct = 0, loss = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        cp += p(i);
        ct += t(i);
        loss += (cp - ct) * (cp - ct);
    }
    return loss;
}

template <class S>
Vec<S> emd_grad(const Vec<S>& p, const Vec<S>& t) {
    // d/dp_i = 2 sum_{j >= i} (cdf(p) - cdf(t))_j: reverse cumulative sum
    Vec<S> diff(p.size());
    S cp = 0, ct = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        cp += p(i);
        ct += t(i);
        diff(i) = cp - ct;
    }
    Vec<S> d(p.size());
    S tail = 0;
    for (Eigen::Index i = p.size() - 1; i >= 0; --i) {
        tail += S(2) * diff(i);
        d(i) = tail;
    }
    return d;
}

template <class S>
S loss_value(LossKind k, const Vec<S>& p, const Vec<S>& t) {
    if (k == LossKind::Bce) return bce_loss(p, t);
    if (is_emd(k)) return emd_loss(p, t);
    return ce_loss(p, t);
}

template <class S>
Vec<S> loss_grad(LossKind k, const Vec<S>& p, const Vec<S>& t) {
    if (k == LossKind::Bce) return bce_grad(p, t);
    if (is_emd(k)) return emd_grad(p, t);
    return ce_grad(p, t);
}

template <class S>
Vec<S> one_hot(int psi, int classes) {
    DOALAB_CHECK(psi >= 0 && psi < classes, "one_hot: class out of range");
    Vec<S> t = Vec<S>::Zero(classes);
    t(psi) = S(1);
    return t;
}

template <class S>
Vec<S> multi_hot(const std::vector<int>& psis, int classes) {
    Vec<S> t = Vec<S>::Zero(classes);
    for (int psi : psis) {
        DOALAB_CHECK(psi >= 0 && psi < classes, "multi_hot: class out of range");
        t(psi) = S(1);
    }
    return t;
}

// 0.4 at psi, 0.2 one class away, 0.1 two away, cyclic wrap
template <class S>
Vec<S> soft_target(int psi, int classes) {
    DOALAB_CHECK(classes >= 5, "soft_target: needs at least 5 classes");
    DOALAB_CHECK(psi >= 0 && psi < classes, "soft_target: class out of range");
    Vec<S> t = Vec<S>::Zero(classes);
    t((psi + classes - 2) % classes) += S(0.1);
    t((psi + classes - 1) % classes) += S(0.2);
    t(psi) += S(0.4);
    t((psi + 1) % classes) += S(0.2);
    t((psi + 2) % classes) += S(0.1);
    return t;
}

// target vector for one source under the given loss
template <class S>
Vec<S> make_target(LossKind k, int psi, int classes) {
    DOALAB_CHECK(k != LossKind::Bce, "make_target: bce targets are multi-hot over all sources");
    return is_soft(k) ? soft_target<S>(psi, classes) : one_hot<S>(psi, classes);
}

struct PitResult {
    double loss = 0.0;
    std::vector<int> perm;  // prediction index assigned to each target slot
};

// min over assignments of sum_n matrix(perm[n], n); exhaustive, N <= 4
template <class S>
PitResult pit_loss(const Mat<S>& pair_loss) {
    const int n = static_cast<int>(pair_loss.rows());
    DOALAB_CHECK(pair_loss.cols() == n, "pit_loss: matrix not square");
    DOALAB_CHECK(n >= 1 && n <= 4, "pit_loss: exhaustive search supports 1..4 sources");
    std::vector<int> perm(static_cast<size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    PitResult best;
    best.loss = std::numeric_limits<double>::infinity();
    do {
        double sum = 0.0;
        for (int j = 0; j < n; ++j) sum += static_cast<double>(pair_loss(perm[static_cast<size_t>(j)], j));
        if (sum < best.loss) {
            best.loss = sum;
            best.perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// ascending numeric order in degrees, ties stable
inline std::vector<double> fixed_order_targets(std::vector<double> doas_deg) {
    std::stable_sort(doas_deg.begin(), doas_deg.end());
    return doas_deg;
}

}  // namespace doalab::neural
