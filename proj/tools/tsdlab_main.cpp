#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "tsdlab/harness.hpp"
#include "tsdlab/matrix_io.hpp"

namespace {

using namespace tsdlab;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;    // usage, config, or I/O problems
constexpr int kExitNumeric = 3;  // non-finite loss / divergence

constexpr std::uint64_t kStreamAdapterCli = 21;
constexpr std::uint64_t kStreamPickCli = 22;

int g_verbosity = 1;  // 0 quiet, 1 normal, 2 verbose

void info(const std::string& msg) {
    if (g_verbosity >= 1) std::cout << msg << "\n";
}

void debug(const std::string& msg) {
    if (g_verbosity >= 2) std::cout << msg << "\n";
}

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir;
    long long seed = -1;
    bool quiet = false;
    bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "flat key=value config file");
    cmd->add_option("--set", args.sets, "override a config key (repeatable, key=value)");
    cmd->add_option("--out", args.out_dir, "output directory (overrides out_dir key)");
    cmd->add_option("--seed", args.seed, "master seed (overrides seed key)");
    cmd->add_flag("--quiet", args.quiet, "suppress progress output");
    cmd->add_flag("--verbose", args.verbose, "extra progress output");
}

ConfigMap resolve_config(const CommonArgs& args) {
    ConfigMap cfg = args.config_path.empty() ? ConfigMap() : ConfigMap::parse_file(args.config_path);
    for (const std::string& s : args.sets) cfg.apply_override(s);
    if (!args.out_dir.empty()) cfg.set("out_dir", args.out_dir);
    if (args.seed >= 0) cfg.set("seed", std::to_string(args.seed));
    g_verbosity = args.quiet ? 0 : (args.verbose ? 2 : 1);
    return cfg;
}

const std::vector<std::string> kTaskKeys = {"kind",      "n",     "m",       "planted_indices", "planted_coeffs",
                                            "noise_std", "n_train", "n_val", "seed",            "task_seed"};
const std::vector<std::string> kTrainKeys = {"lr",     "steps",      "batch",       "optimizer", "t_prelaunch",
                                             "s_dash", "record_every", "train_seed", "r",        "alpha",
                                             "epsilon"};

std::vector<std::string> concat_keys(std::initializer_list<std::vector<std::string>> lists,
                                     std::initializer_list<const char*> extra) {
    std::vector<std::string> out;
    for (const auto& l : lists) out.insert(out.end(), l.begin(), l.end());
    for (const char* e : extra) out.emplace_back(e);
    return out;
}

// --- oracle ----------------------------------------------------------------

void write_spectrum_csv(const SvdFactors& f, const ChangeRates& cr, const std::filesystem::path& out) {
    std::vector<int> rank_of(cr.k());
    for (int pos = 0; pos < cr.k(); ++pos) rank_of[cr.ranking[pos]] = pos;
    std::string body = "index,sigma,signed_delta,abs_delta,scaled_rate,rank\n";
    for (int i = 0; i < cr.k(); ++i) {
        body += std::to_string(i) + "," + format_double(f.sigma[i]) + "," + format_double(cr.signed_[i]) + "," +
                format_double(cr.delta[i]) + "," + format_double(scaled_rate(cr.delta[i])) + "," +
                std::to_string(rank_of[i]) + "\n";
    }
    // build first, write once: a failed run must not leave partial output
    std::ofstream os(out);
    if (!os) throw IoError("cannot write " + out.string());
    os << body;
    if (!os) throw IoError("write failed: " + out.string());
}

int cmd_oracle(const std::string& w_path, const std::string& w_star_path, double epsilon, const std::string& out) {
    Matrix w = load_matrix(w_path);
    Matrix w_star = load_matrix(w_star_path);
    require_same_shape(w, w_star, "oracle");
    SvdFactors f = svd(w);
    ChangeRates cr = change_rates(f, sub(w_star, w), epsilon);
    write_spectrum_csv(f, cr, out);
    info("wrote spectrum for " + std::to_string(cr.k()) + " core directions to " + out);
    return kExitOk;
}

// --- train -------------------------------------------------------------------

void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& out) {
    std::ofstream os(out);
    if (!os) throw IoError("cannot write " + out.string());
    os << "step,loss,val_loss,ltsd_indices\n";
    std::size_t vi = 0, si = 0;
    for (std::size_t i = 0; i < trace.losses.size(); ++i) {
        const int step = static_cast<int>(i) + 1;
        os << step << "," << format_double(trace.losses[i]) << ",";
        if (vi < trace.val_losses.size() && trace.val_losses[vi].first == step)
            os << format_double(trace.val_losses[vi++].second);
        os << ",";
        if (si < trace.ltsd_snapshots.size() && trace.ltsd_snapshots[si].step == step) {
            const auto& idx = trace.ltsd_snapshots[si++].indices;
            for (std::size_t j = 0; j < idx.size(); ++j) os << (j ? ";" : "") << idx[j];
        }
        os << "\n";
    }
}

int cmd_train(const ConfigMap& cfg) {
    cfg.require_known_keys(concat_keys({kTaskKeys, kTrainKeys}, {"method", "mode", "out_dir"}));
    TaskSpec spec = task_from_config(cfg);
    TrainConfig tc = train_from_config(cfg);
    const std::string method_name = cfg.get_string("method", "lora");
    RunMethod method = run_method_from_string(method_name);
    if (method == RunMethod::full_ft)
        throw ConfigError("cmd_train drives adapter methods; run full_ft through the ablate matrix");
    const std::string mode = cfg.get_string("mode", "tsd");
    const int rank = static_cast<int>(cfg.get_int("r", 4));
    double alpha = cfg.get_double("alpha", -1.0);
    if (alpha < 0.0) alpha = rank;
    const std::filesystem::path out_dir = cfg.get_string("out_dir", "out");
    const std::uint64_t master = static_cast<std::uint64_t>(cfg.get_int("seed", 0));

    info("generating " + to_string(spec.kind) + " task (" + std::to_string(spec.n) + "x" + std::to_string(spec.m) +
         ")");
    Task task = gen_task(spec);
    SvdFactors f = svd(task.base_w);

    info("training method=" + method_name + " for " + std::to_string(tc.steps) + " steps");
    MethodRun run = run_method(method, mode, task, f, tc, rank, alpha, mix_seed(master, kStreamAdapterCli),
                               mix_seed(master, kStreamPickCli));

    std::filesystem::create_directories(out_dir);
    write_trace_csv(run.trace, out_dir / "trace.csv");
    save_adapter(run.trace.final_state, out_dir / "state");
    write_effective_config(cfg, out_dir);
    debug("final training loss " + format_double(run.trace.losses.empty() ? 0.0 : run.trace.losses.back()));
    info("wrote trace.csv and state/ under " + out_dir.string());
    return kExitOk;
}

// --- ablate ------------------------------------------------------------------

int cmd_ablate(const ConfigMap& cfg) {
    cfg.require_known_keys(concat_keys({kTaskKeys, kTrainKeys},
                                       {"methods", "direction_modes", "init_modes", "t_sweep", "s_sweep", "seeds",
                                        "out_dir"}));
    ExperimentConfig ec = experiment_from_config(cfg);
    if (ec.methods.empty()) throw ConfigError("ablate needs a non-empty 'methods' list");
    info("running " + std::to_string(ec.methods.size()) + " method(s) x " + std::to_string(ec.seeds.size()) +
         " seed(s) with up to " + std::to_string(thread_budget()) + " threads");
    std::vector<ReportRow> rows = run_matrix(ec);
    write_report(rows, ec.out_dir);
    write_effective_config(cfg, ec.out_dir);
    info("wrote " + std::to_string(rows.size()) + " rows to " + ec.out_dir + "/report.csv");
    return kExitOk;
}

// --- analyze -----------------------------------------------------------------

int cmd_analyze(const ConfigMap& cfg) {
    // accepts a train config plus state_dir so one file drives both commands
    cfg.require_known_keys(concat_keys({kTaskKeys, kTrainKeys}, {"method", "mode", "state_dir", "out_dir", "step"}));
    const std::string state_dir = cfg.require_string("state_dir");
    const std::filesystem::path out_dir = cfg.get_string("out_dir", "out");
    const double epsilon = cfg.get_double("epsilon", kDefaultEpsilon);

    TaskSpec spec = task_from_config(cfg);
    Task task = gen_task(spec);
    SvdFactors f = svd(task.base_w);
    TsdGroundTruth truth = ground_truth_tsd(task.base_w, task.w_star, epsilon);
    AdapterState state = load_adapter(state_dir);
    if (state.n() != spec.n || state.m() != spec.m)
        throw ConfigError("state in " + state_dir + " is " + std::to_string(state.n()) + "x" +
                          std::to_string(state.m()) + " but the task is " + std::to_string(spec.n) + "x" +
                          std::to_string(spec.m));

    MetricsRow row;
    row.seed = static_cast<long long>(spec.seed);
    row.step = static_cast<int>(cfg.get_int("step", 0));
    row.layer = 0;

    ChangeRates dtsd = change_rates(f, effective_delta(state), epsilon);
    PrScore sc = pr_score(top_k(dtsd, std::min(8, dtsd.k())), truth);
    row.precision = sc.precision;
    row.recall = sc.recall;
    if (state.dash) {
        const std::vector<int>& ltsd = state.dash->indices;
        AlignmentRow al = alignment(ltsd, dtsd, truth, static_cast<int>(ltsd.size()));
        row.dtsd_ltsd = al.dtsd_cap_ltsd;
        row.tsd_ltsd = al.tsd_cap_ltsd;
        row.tsd_dtsd = al.tsd_cap_dtsd;
        try {
            AmpReport amp = amplification(task.base_w, state);
            row.amp_all = amp.amp_all;
            row.amp_ab = amp.amp_ab;
            row.amp_dash = amp.amp_dash;
        } catch (const DegenerateProjection&) {
        }
    }

    std::filesystem::create_directories(out_dir);
    std::ofstream os(out_dir / "metrics.csv");
    if (!os) throw IoError("cannot write " + (out_dir / "metrics.csv").string());
    write_metrics_csv({row}, os);
    write_effective_config(cfg, out_dir);
    info("wrote metrics.csv under " + out_dir.string());
    return kExitOk;
}

// --- report ------------------------------------------------------------------

int cmd_report(const ConfigMap& cfg) {
    cfg.require_known_keys({"results_dir", "out_dir", "seed"});
    const std::filesystem::path results_dir = cfg.get_string("results_dir", "out");
    const std::filesystem::path out_dir = cfg.get_string("out_dir", "out/merged");

    std::vector<std::filesystem::path> files;
    if (std::filesystem::exists(results_dir)) {
        for (const auto& entry : std::filesystem::recursive_directory_iterator(results_dir)) {
            if (entry.is_regular_file() && entry.path().filename() == "report.csv" &&
                entry.path().parent_path() != std::filesystem::path(out_dir))
                files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    std::vector<ReportRow> rows;
    for (const auto& file : files) {
        std::vector<ReportRow> part = parse_report_csv(file);
        rows.insert(rows.end(), part.begin(), part.end());
        debug("merged " + std::to_string(part.size()) + " rows from " + file.string());
    }
    std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return std::tie(a.method, a.mode, a.t, a.s, a.seed) < std::tie(b.method, b.mode, b.t, b.s, b.seed);
    });
    write_report(rows, out_dir);
    write_effective_config(cfg, out_dir);
    info("merged " + std::to_string(rows.size()) + " rows from " + std::to_string(files.size()) + " report(s)");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tsdlab: spectral analysis and task-specific-direction training on planted tasks"};
    app.require_subcommand(1);

    CommonArgs oracle_args, train_args, ablate_args, analyze_args, report_args;

    auto* oracle = app.add_subcommand("oracle", "change-rate spectrum of a weight pair (w, w_star)");
    std::string w_path, w_star_path, oracle_out = "spectrum.csv";
    double oracle_eps = kDefaultEpsilon;
    oracle->add_option("w", w_path, "base weight matrix (.tsdw or .csv)")->required();
    oracle->add_option("w_star", w_star_path, "optimal weight matrix (.tsdw or .csv)")->required();
    oracle->add_option("--epsilon", oracle_eps, "change-rate regularizer");
    oracle->add_option("--out", oracle_out, "output spectrum CSV path");
    oracle->add_flag("--quiet", oracle_args.quiet, "suppress progress output");
    oracle->add_flag("--verbose", oracle_args.verbose, "extra progress output");

    auto* train = app.add_subcommand("train", "one training run (lora | dash | init | tsd)");
    add_common(train, train_args);
    auto* ablate = app.add_subcommand("ablate", "method/mode/sweep experiment matrix");
    add_common(ablate, ablate_args);
    auto* analyze = app.add_subcommand("analyze", "metrics for a saved adapter state");
    add_common(analyze, analyze_args);
    auto* report = app.add_subcommand("report", "merge saved reports and regenerate outputs");
    add_common(report, report_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (oracle->parsed()) {
            g_verbosity = oracle_args.quiet ? 0 : (oracle_args.verbose ? 2 : 1);
            return cmd_oracle(w_path, w_star_path, oracle_eps, oracle_out);
        }
        if (train->parsed()) return cmd_train(resolve_config(train_args));
        if (ablate->parsed()) return cmd_ablate(resolve_config(ablate_args));
        if (analyze->parsed()) return cmd_analyze(resolve_config(analyze_args));
        if (report->parsed()) return cmd_report(resolve_config(report_args));
    } catch (const NumericDivergence& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
