#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tsdlab/config.hpp"
#include "tsdlab/metrics.hpp"
#include "tsdlab/models.hpp"

namespace tsdlab {

enum class RunMethod { full_ft, lora, dash, init, tsd };
enum class DirectionMode { tsd, top, bottom, random, all, top_plus_bottom };
enum class InitMode { tsd, top, bottom, random };

std::string to_string(RunMethod m);
std::string to_string(DirectionMode m);
std::string to_string(InitMode m);
RunMethod run_method_from_string(const std::string& s);
DirectionMode direction_mode_from_string(const std::string& s);
InitMode init_mode_from_string(const std::string& s);

struct ExperimentConfig {
    TaskSpec task;
    TrainConfig train;
    std::vector<RunMethod> methods;
    std::vector<DirectionMode> direction_modes;  // dash cells; default {tsd}
    std::vector<InitMode> init_modes;            // init cells; default {tsd}
    std::vector<int> t_sweep;                    // dash cells; default {train.t_prelaunch}
    std::vector<int> s_sweep;                    // dash cells; default {train.s_dash}
    std::vector<long long> seeds;
    std::string out_dir = "out";
    int rank = 4;
    double alpha = -1.0;  // < 0 means alpha = rank
    double epsilon = kDefaultEpsilon;
};

struct SpectrumPoint {
    int index = 0;
    double sigma = 0.0;
    double signed_delta = 0.0;
    double abs_delta = 0.0;
    double scaled = 0.0;
    int rank = 0;
};

// One experiment cell x seed. The scalar fields are the CSV/JSON row; the
// trailing series feed plotdata/ and never enter report.csv.
struct ReportRow {
    std::string method;
    std::string mode = "-";
    int t = 0;
    int s = 0;
    long long seed = 0;
    double final_train_loss = 0.0;
    double final_val_loss = 0.0;
    std::optional<double> precision, recall;
    std::optional<double> dtsd_ltsd, tsd_ltsd, tsd_dtsd;
    std::optional<double> amp_all, amp_ab, amp_dash;

    std::vector<double> loss_curve;
    std::vector<std::pair<int, double>> val_curve;
    std::vector<std::tuple<int, double, double>> pr_curve;  // step, precision, recall
    std::vector<SpectrumPoint> spectrum;                    // ground-truth spectrum of the seed's task
};

// Direction choice for the dash term. `tsd` ranks by measured change rates;
// top/bottom/random/all/top_plus_bottom reproduce the ablation baselines.
std::vector<int> select_directions(DirectionMode mode, const ChangeRates& cr, int s, std::uint64_t seed);

// Init-split choice; top/bottom/random mirror the PISSA/MiLoRA/RoSA-style
// initializations, tsd ranks by measured change rates.
std::vector<int> select_init(InitMode mode, const ChangeRates& cr, const SvdFactors& f, int r, std::uint64_t seed);

// One adapter-method training run (lora, dash, init, or tsd). For init the
// run is composed of a plain-LoRA probe over the pre-launch budget, the
// split selection, and the remaining budget on the reinitialized state;
// `selected` carries the split (init) or launched (dash/tsd) indices.
struct MethodRun {
    TrainTrace trace;
    std::vector<int> selected;
};

MethodRun run_method(RunMethod method, const std::string& mode, const Task& task, const SvdFactors& f,
                     const TrainConfig& tc, int rank, double alpha, std::uint64_t adapter_seed,
                     std::uint64_t pick_seed);

// Runs every cell x seed (tasks shared per seed across cells so comparisons
// are paired), in parallel up to TSDLAB_THREADS jobs. Rows come back sorted
// by (method, mode, t, s, seed).
std::vector<ReportRow> run_matrix(const ExperimentConfig& cfg);

// report.csv + report.json + plotdata/ (spectra, loss curves,
// precision/recall-vs-step series).
void write_report(const std::vector<ReportRow>& rows, const std::filesystem::path& out_dir);

extern const char* const kReportCsvHeader;
std::vector<ReportRow> parse_report_csv(const std::filesystem::path& file);

// Config-file front ends (flat key=value; see README for the key list).
TaskSpec task_from_config(const ConfigMap& cfg);
TrainConfig train_from_config(const ConfigMap& cfg);
ExperimentConfig experiment_from_config(const ConfigMap& cfg);

int thread_budget();  // TSDLAB_THREADS, defaulting to the logical core count

}  // namespace tsdlab
