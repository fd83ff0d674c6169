#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "doalab/common.hpp"
#include "doalab/wav.hpp"

namespace doalab {

// Permutation-minimized mean absolute cyclic difference in degrees.
// Exhaustive over N! pairings, so N is capped at 6.
double cyclic_mae(const std::vector<double>& preds_deg, const std::vector<double>& refs_deg);

struct UtteranceResult {
    std::vector<double> pred_deg;
    std::vector<double> ref_deg;
};

// Corpus MAE: per-utterance permutation minimum, then mean over utterances.
double corpus_mae(const std::vector<UtteranceResult>& results);

// Two-source results grouped by the cyclic separation of the reference pair,
// rounded half-up to integer degrees: 10-20, 21-45, 46-90, 91-180, else
// "other". Only non-empty groups appear.
std::map<std::string, double> binned_mae(const std::vector<UtteranceResult>& results);

// Scale-invariant SDR with optimal scalar projection onto the reference,
// clamped to [-60, 60] dB. Mono in, equal lengths, nonzero reference.
double si_sdr(const Waveform& est, const Waveform& ref);

struct ReportRow {
    std::string method;
    int gamma = 1;
    std::string loss = "-";  // "-" for non-neural rows
    std::string pit = "-";   // "yes" / "no" / "-"
    double dev_mae = std::numeric_limits<double>::quiet_NaN();
    double test_mae = std::numeric_limits<double>::quiet_NaN();
};

std::string report_csv(const std::vector<ReportRow>& rows);
std::string report_table(const std::vector<ReportRow>& rows);

}  // namespace doalab
