#include "tsdlab/metrics.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <string>

#include "tsdlab/matrix_io.hpp"

namespace tsdlab {

namespace {

int intersection_size(const std::vector<int>& a, const std::vector<int>& b) {
    std::set<int> sa(a.begin(), a.end());
    int c = 0;
    for (int x : b) c += sa.count(x) ? 1 : 0;
    return c;
}

std::vector<int> ranking_prefix(const ChangeRates& rates, int k) {
    k = std::min(k, rates.k());
    return {rates.ranking.begin(), rates.ranking.begin() + k};
}

}  // namespace

TsdGroundTruth ground_truth_tsd(const Matrix& w, const Matrix& w_star, double epsilon) {
    require_same_shape(w, w_star, "ground_truth_tsd");
    TsdGroundTruth truth;
    truth.rates = change_rates(svd(w), sub(w_star, w), epsilon);
    truth.top4 = ranking_prefix(truth.rates, 4);
    truth.top16 = ranking_prefix(truth.rates, 16);
    return truth;
}

PrScore pr_score(const std::vector<int>& pred, const TsdGroundTruth& truth, int k_prec_ref, int k_rec_ref) {
    if (pred.empty()) throw InvalidArgument("pr_score: empty prediction");
    std::set<int> uniq(pred.begin(), pred.end());
    if (uniq.size() != pred.size()) throw InvalidArgument("pr_score: duplicate predicted indices");

    PrScore score;
    score.k_pred = static_cast<int>(pred.size());
    score.k_prec_ref = std::min(k_prec_ref, truth.rates.k());
    score.k_rec_ref = std::min(k_rec_ref, truth.rates.k());
    std::vector<int> prec_ref = ranking_prefix(truth.rates, score.k_prec_ref);
    std::vector<int> rec_ref = ranking_prefix(truth.rates, score.k_rec_ref);
    score.precision = static_cast<double>(intersection_size(prec_ref, pred)) / score.k_pred;
    score.recall = static_cast<double>(intersection_size(rec_ref, pred)) / score.k_rec_ref;
    return score;
}

AlignmentRow alignment(const std::vector<int>& ltsd, const ChangeRates& dtsd_rates, const TsdGroundTruth& truth,
                       int s) {
    if (static_cast<int>(ltsd.size()) != s)
        throw InvalidArgument("alignment: launched set has " + std::to_string(ltsd.size()) + " indices, expected " +
                              std::to_string(s));
    std::vector<int> dtsd_top4 = ranking_prefix(dtsd_rates, 4);
    std::vector<int> dtsd_tops = ranking_prefix(dtsd_rates, s);
    const double denom4 = static_cast<double>(dtsd_top4.size());
    AlignmentRow row;
    row.dtsd_cap_ltsd = intersection_size(ltsd, dtsd_top4) / denom4;
    row.tsd_cap_ltsd = intersection_size(ltsd, truth.top4) / static_cast<double>(truth.top4.size());
    row.tsd_cap_dtsd = intersection_size(dtsd_tops, truth.top4) / static_cast<double>(truth.top4.size());
    return row;
}

AmpReport amplification(const Matrix& w, const AdapterState& state) {
    if (!state.dash) throw InvalidState("amplification: state has no dash term");
    const DashTerm& d = *state.dash;
    Matrix ut = transpose(d.u_bar);  // s x n

    auto projected_norm = [&](const Matrix& weights) { return frob_norm(matmul(matmul(ut, weights), d.v_bar)); };

    const double denom = projected_norm(w);
    if (denom < 1e-12)
        throw DegenerateProjection("amplification: ||U_bar^T W V_bar||_F = " + format_double(denom));

    AdapterState ab_only = state;
    ab_only.dash.reset();
    AdapterState dash_only = state;
    for (double& x : dash_only.core.b.data()) x = 0.0;

    AmpReport rep;
    rep.amp_all = projected_norm(merged_weight(state)) / denom;
    rep.amp_ab = projected_norm(merged_weight(ab_only)) / denom;
    rep.amp_dash = projected_norm(merged_weight(dash_only)) / denom;
    return rep;
}

double task_overlap(const TsdGroundTruth& a, const TsdGroundTruth& b, int k) {
    const int kmax = std::min(a.rates.k(), b.rates.k());
    if (k < 1 || k > kmax)
        throw InvalidArgument("task_overlap: k = " + std::to_string(k) + " out of range [1, " + std::to_string(kmax) +
                              "]");
    return static_cast<double>(intersection_size(ranking_prefix(a.rates, k), ranking_prefix(b.rates, k))) / k;
}

const char* const kMetricsCsvHeader =
    "seed,step,layer,precision,recall,dtsd_ltsd,tsd_ltsd,tsd_dtsd,amp_all,amp_ab,amp_dash";

namespace {

void put_opt(std::ostream& os, const std::optional<double>& v) {
    os << ",";
    if (v) os << format_double(*v);
}

}  // namespace

void write_metrics_csv(const std::vector<MetricsRow>& rows, std::ostream& os) {
    os << kMetricsCsvHeader << "\n";
    for (const MetricsRow& r : rows) {
        os << r.seed << "," << r.step << "," << r.layer;
        put_opt(os, r.precision);
        put_opt(os, r.recall);
        put_opt(os, r.dtsd_ltsd);
        put_opt(os, r.tsd_ltsd);
        put_opt(os, r.tsd_dtsd);
        put_opt(os, r.amp_all);
        put_opt(os, r.amp_ab);
        put_opt(os, r.amp_dash);
        os << "\n";
    }
}

}  // namespace tsdlab
