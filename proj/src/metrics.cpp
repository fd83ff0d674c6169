#include "doalab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace doalab {

double cyclic_mae(const std::vector<double>& preds_deg, const std::vector<double>& refs_deg) {
    const size_t n = preds_deg.size();
    DOALAB_CHECK(n == refs_deg.size(), "cyclic_mae: prediction/reference count mismatch");
    DOALAB_CHECK(n >= 1 && n <= 6, "cyclic_mae: supported source counts are 1..6");
    std::vector<size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double sum = 0.0;
        for (size_t i = 0; i < n; ++i) sum += cyclic_diff_deg(preds_deg[perm[i]], refs_deg[i]);
        best = std::min(best, sum / static_cast<double>(n));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double corpus_mae(const std::vector<UtteranceResult>& results) {
    DOALAB_CHECK(!results.empty(), "corpus_mae: no results");
    double sum = 0.0;
    for (const auto& r : results) sum += cyclic_mae(r.pred_deg, r.ref_deg);
    return sum / static_cast<double>(results.size());
}

std::map<std::string, double> binned_mae(const std::vector<UtteranceResult>& results) {
    std::map<std::string, std::pair<double, int>> acc;
    for (const auto& r : results) {
        DOALAB_CHECK(r.ref_deg.size() == 2, "binned_mae: needs 2-source results");
        const int sep =
            static_cast<int>(std::floor(cyclic_diff_deg(r.ref_deg[0], r.ref_deg[1]) + 0.5));
        const char* label = "other";
        if (sep >= 10 && sep <= 20)
            label = "10-20";
        else if (sep >= 21 && sep <= 45)
            label = "21-45";
        else if (sep >= 46 && sep <= 90)
            label = "46-90";
        else if (sep >= 91 && sep <= 180)
            label = "91-180";
        auto& [sum, count] = acc[label];
        sum += cyclic_mae(r.pred_deg, r.ref_deg);
        ++count;
    }
    std::map<std::string, double> out;
    for (const auto& [label, sc] : acc) out[label] = sc.first / sc.second;
    return out;
}

double si_sdr(const Waveform& est, const Waveform& ref) {
    DOALAB_CHECK(est.channels.size() == 1 && ref.channels.size() == 1, "si_sdr: mono signals only");
    const auto& e = est.channels[0];
    const auto& r = ref.channels[0];
    DOALAB_CHECK(e.size() == r.size(), "si_sdr: length mismatch");
    double rr = 0.0, er = 0.0;
    for (size_t i = 0; i < r.size(); ++i) {
        rr += static_cast<double>(r[i]) * r[i];
        er += static_cast<double>(e[i]) * r[i];
    }
    DOALAB_CHECK(rr > 0.0, "si_sdr: zero reference");
    const double alpha = er / rr;
    double target = 0.0, err = 0.0;
    for (size_t i = 0; i < r.size(); ++i) {
        const double t = alpha * r[i];
        const double d = e[i] - t;
        target += t * t;
        err += d * d;
    }
    if (err == 0.0) return 60.0;
    if (target == 0.0) return -60.0;
    return std::clamp(10.0 * std::log10(target / err), -60.0, 60.0);
}

namespace {

std::string fmt_mae(double v) {
    if (std::isnan(v)) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string report_csv(const std::vector<ReportRow>& rows) {
    std::ostringstream os;
    os << "method,gamma,loss,pit,dev_mae_deg,test_mae_deg\n";
    for (const auto& r : rows) {
        os << r.method << ',' << r.gamma << ',' << r.loss << ',' << r.pit << ','
           << (std::isnan(r.dev_mae) ? "" : fmt_mae(r.dev_mae)) << ','
           << (std::isnan(r.test_mae) ? "" : fmt_mae(r.test_mae)) << '\n';
    }
    return os.str();
}

std::string report_table(const std::vector<ReportRow>& rows) {
    const std::vector<std::string> header = {"method", "gamma", "loss",
                                             "pit",    "dev",   "test"};
    std::vector<std::vector<std::string>> cells;
    for (const auto& r : rows)
        cells.push_back({r.method, std::to_string(r.gamma), r.loss, r.pit, fmt_mae(r.dev_mae),
                         fmt_mae(r.test_mae)});
    std::vector<size_t> width(header.size());
    for (size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream os;
    auto emit = [&](const std::vector<std::string>& row) {
        for (size_t c = 0; c < row.size(); ++c) {
            os << row[c] << std::string(width[c] - row[c].size(), ' ');
            os << (c + 1 < row.size() ? "  " : "");
        }
        os << '\n';
    };
    emit(header);
    for (size_t c = 0; c < header.size(); ++c)
        os << std::string(width[c], '-') << (c + 1 < header.size() ? "  " : "");
    os << '\n';
    for (const auto& row : cells) emit(row);
    return os.str();
}

}  // namespace doalab
