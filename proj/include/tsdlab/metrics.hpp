#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "tsdlab/adapters.hpp"
#include "tsdlab/matrix.hpp"
#include "tsdlab/spectral.hpp"

namespace tsdlab {

// Change rates of the optimal alteration W* - W on W's core directions; the
// ground truth the launched directions are judged against.
struct TsdGroundTruth {
    ChangeRates rates;
    std::vector<int> top4;   // clipped to k when k < 4
    std::vector<int> top16;  // clipped to k when k < 16
};

struct PrScore {
    double precision = 0.0;  // |pred ∩ top_{k_prec_ref}| / |pred|
    double recall = 0.0;     // |top_{k_rec_ref} ∩ pred| / k_rec_ref
    int k_pred = 8;
    int k_prec_ref = 16;
    int k_rec_ref = 4;
};

struct AlignmentRow {
    double dtsd_cap_ltsd = 0.0;  // |top-4 of final-delta rates ∩ launched set| / 4
    double tsd_cap_ltsd = 0.0;   // |top-4 ground truth ∩ launched set| / 4
    double tsd_cap_dtsd = 0.0;   // |top-4 ground truth ∩ top-s of final-delta rates| / 4
};

struct AmpReport {
    double amp_all = 0.0;
    double amp_ab = 0.0;
    double amp_dash = 0.0;
};

TsdGroundTruth ground_truth_tsd(const Matrix& w, const Matrix& w_star, double epsilon = kDefaultEpsilon);

PrScore pr_score(const std::vector<int>& pred, const TsdGroundTruth& truth, int k_prec_ref = 16, int k_rec_ref = 4);

AlignmentRow alignment(const std::vector<int>& ltsd, const ChangeRates& dtsd_rates, const TsdGroundTruth& truth,
                       int s);

// Frobenius-norm ratios after projecting onto the launched directions
// (U_bar, V_bar from the state's dash term): merged weight, base + AB-only
// delta, and base + dash-only delta, each against ||U_bar^T w V_bar||_F.
AmpReport amplification(const Matrix& w, const AdapterState& state);

// |top-k(a) ∩ top-k(b)| / k.
double task_overlap(const TsdGroundTruth& a, const TsdGroundTruth& b, int k);

// One row of the fixed-header metrics CSV; absent optionals print as empty.
struct MetricsRow {
    long long seed = 0;
    int step = 0;
    int layer = 0;
    std::optional<double> precision, recall;
    std::optional<double> dtsd_ltsd, tsd_ltsd, tsd_dtsd;
    std::optional<double> amp_all, amp_ab, amp_dash;
};

extern const char* const kMetricsCsvHeader;
void write_metrics_csv(const std::vector<MetricsRow>& rows, std::ostream& os);

}  // namespace tsdlab
