#include "tsdlab/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "tsdlab/matrix_io.hpp"

namespace tsdlab {

namespace {

constexpr std::uint64_t kStreamTaskSeed = 11;
constexpr std::uint64_t kStreamTrainSeed = 12;
constexpr std::uint64_t kStreamAdapterInit = 13;
constexpr std::uint64_t kStreamDirectionPick = 14;
constexpr std::uint64_t kStreamInitPick = 15;

}  // namespace

std::string to_string(RunMethod m) {
    switch (m) {
        case RunMethod::full_ft: return "full_ft";
        case RunMethod::lora: return "lora";
        case RunMethod::dash: return "dash";
        case RunMethod::init: return "init";
        case RunMethod::tsd: return "tsd";
    }
    return "lora";
}

std::string to_string(DirectionMode m) {
    switch (m) {
        case DirectionMode::tsd: return "tsd";
        case DirectionMode::top: return "top";
        case DirectionMode::bottom: return "bottom";
        case DirectionMode::random: return "random";
        case DirectionMode::all: return "all";
        case DirectionMode::top_plus_bottom: return "top_plus_bottom";
    }
    return "tsd";
}

std::string to_string(InitMode m) {
    switch (m) {
        case InitMode::tsd: return "tsd";
        case InitMode::top: return "top";
        case InitMode::bottom: return "bottom";
        case InitMode::random: return "random";
    }
    return "tsd";
}

RunMethod run_method_from_string(const std::string& s) {
    if (s == "full_ft") return RunMethod::full_ft;
    if (s == "lora") return RunMethod::lora;
    if (s == "dash") return RunMethod::dash;
    if (s == "init") return RunMethod::init;
    if (s == "tsd") return RunMethod::tsd;
    throw InvalidArgument("unknown method '" + s + "'");
}

DirectionMode direction_mode_from_string(const std::string& s) {
    if (s == "tsd") return DirectionMode::tsd;
    if (s == "top") return DirectionMode::top;
    if (s == "bottom") return DirectionMode::bottom;
    if (s == "random") return DirectionMode::random;
    if (s == "all") return DirectionMode::all;
    if (s == "top_plus_bottom") return DirectionMode::top_plus_bottom;
    throw InvalidArgument("unknown direction mode '" + s + "'");
}

InitMode init_mode_from_string(const std::string& s) {
    if (s == "tsd") return InitMode::tsd;
    if (s == "top") return InitMode::top;
    if (s == "bottom") return InitMode::bottom;
    if (s == "random") return InitMode::random;
    throw InvalidArgument("unknown init mode '" + s + "'");
}

std::vector<int> select_directions(DirectionMode mode, const ChangeRates& cr, int s, std::uint64_t seed) {
    const int k = cr.k();
    if (mode != DirectionMode::all && (s < 1 || s > k))
        throw InvalidArgument("select_directions: s = " + std::to_string(s) + " out of range [1, " +
                              std::to_string(k) + "]");
    std::vector<int> out;
    switch (mode) {
        case DirectionMode::tsd:
            return top_k(cr, s);
        case DirectionMode::top:
            for (int i = 0; i < s; ++i) out.push_back(i);
            return out;
        case DirectionMode::bottom:
            for (int i = k - s; i < k; ++i) out.push_back(i);
            return out;
        case DirectionMode::random: {
            std::vector<int> pool(k);
            for (int i = 0; i < k; ++i) pool[i] = i;
            Rng rng(seed);
            for (int i = 0; i < s; ++i) {
                int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(k - i)));
                std::swap(pool[i], pool[j]);
                out.push_back(pool[i]);
            }
            return out;
        }
        case DirectionMode::all:
            for (int i = 0; i < k; ++i) out.push_back(i);
            return out;
        case DirectionMode::top_plus_bottom: {
            const int n_top = (s + 1) / 2, n_bot = s / 2;
            if (n_top + n_bot > k) throw InvalidArgument("select_directions: top_plus_bottom overlaps itself");
            for (int i = 0; i < n_top; ++i) out.push_back(i);
            for (int i = k - n_bot; i < k; ++i) out.push_back(i);
            return out;
        }
    }
    return out;
}

std::vector<int> select_init(InitMode mode, const ChangeRates& cr, const SvdFactors& f, int r, std::uint64_t seed) {
    (void)f;
    switch (mode) {
        case InitMode::tsd: return select_directions(DirectionMode::tsd, cr, r, seed);
        case InitMode::top: return select_directions(DirectionMode::top, cr, r, seed);
        case InitMode::bottom: return select_directions(DirectionMode::bottom, cr, r, seed);
        case InitMode::random: return select_directions(DirectionMode::random, cr, r, seed);
    }
    return {};
}

int thread_budget() {
    if (const char* env = std::getenv("TSDLAB_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

MethodRun run_method(RunMethod method, const std::string& mode, const Task& task, const SvdFactors& f,
                     const TrainConfig& tc, int rank, double alpha, std::uint64_t adapter_seed,
                     std::uint64_t pick_seed) {
    MethodRun run;
    switch (method) {
        case RunMethod::full_ft:
            throw InvalidArgument("run_method: full_ft is driven by run_matrix/train_full, not an adapter run");
        case RunMethod::lora: {
            run.trace = train(make_lora_state(task.base_w, rank, alpha, adapter_seed), task, tc, f);
            break;
        }
        case RunMethod::dash:
        case RunMethod::tsd: {
            AdapterState state = method == RunMethod::dash ? make_dash_state(task.base_w, rank, alpha, adapter_seed)
                                                           : make_tsd_state(task.base_w, rank, alpha, adapter_seed);
            DirectionSelector selector;
            if (method == RunMethod::dash && mode != "tsd" && mode != "-") {
                DirectionMode dm = direction_mode_from_string(mode);
                int want = tc.s_dash;
                selector = [dm, want, pick_seed](const ChangeRates& cr, const SvdFactors&) {
                    return select_directions(dm, cr, std::min(want, cr.k()), pick_seed);
                };
            }
            run.trace = train(std::move(state), task, tc, f, selector);
            if (run.trace.final_state.dash) run.selected = run.trace.final_state.dash->indices;
            break;
        }
        case RunMethod::init: {
            // Plain-LoRA probe over the pre-launch budget picks the split.
            const int t_probe = std::min(tc.t_prelaunch, tc.steps);
            ChangeRates cr;
            TrainTrace probe_trace;
            if (t_probe > 0) {
                TrainConfig tc_probe = tc;
                tc_probe.steps = t_probe;
                tc_probe.t_prelaunch = 0;
                probe_trace = train(make_lora_state(task.base_w, rank, alpha, adapter_seed), task, tc_probe, f);
                cr = change_rates(f, effective_delta(probe_trace.final_state));
            } else {
                cr = change_rates(f, Matrix(task.base_w.rows(), task.base_w.cols()));
            }
            InitMode im = (mode == "-") ? InitMode::tsd : init_mode_from_string(mode);
            run.selected = select_init(im, cr, f, rank, pick_seed);

            AdapterState state = make_init_state(task.base_w, f, run.selected, alpha);
            if (tc.steps - t_probe > 0) {
                TrainConfig tc_post = tc;
                tc_post.steps = tc.steps - t_probe;
                tc_post.t_prelaunch = 0;
                run.trace = train(std::move(state), task, tc_post, f);
            } else {
                run.trace.final_state = std::move(state);
            }
            run.trace.losses.insert(run.trace.losses.begin(), probe_trace.losses.begin(), probe_trace.losses.end());
            break;
        }
    }
    return run;
}

namespace {

struct Cell {
    RunMethod method;
    std::string mode;
    int t;
    int s;
};

// Everything shared by every cell of one sweep seed.
struct SeedContext {
    long long seed_value = 0;
    Task task;
    SvdFactors factors;
    TsdGroundTruth truth;
    std::vector<SpectrumPoint> spectrum;
};

SeedContext make_seed_context(const ExperimentConfig& cfg, long long seed_value) {
    SeedContext ctx;
    ctx.seed_value = seed_value;
    TaskSpec spec = cfg.task;
    spec.seed = mix_seed(cfg.task.seed, mix_seed(static_cast<std::uint64_t>(seed_value), kStreamTaskSeed));
    ctx.task = gen_task(spec);
    ctx.factors = svd(ctx.task.base_w);
    ctx.truth = ground_truth_tsd(ctx.task.base_w, ctx.task.w_star, cfg.epsilon);
    ctx.spectrum.resize(ctx.truth.rates.k());
    std::vector<int> rank_of(ctx.truth.rates.k());
    for (int pos = 0; pos < ctx.truth.rates.k(); ++pos) rank_of[ctx.truth.rates.ranking[pos]] = pos;
    for (int i = 0; i < ctx.truth.rates.k(); ++i) {
        ctx.spectrum[i] = {i, ctx.factors.sigma[i], ctx.truth.rates.signed_[i], ctx.truth.rates.delta[i],
                           scaled_rate(ctx.truth.rates.delta[i]), rank_of[i]};
    }
    return ctx;
}

double effective_alpha(const ExperimentConfig& cfg) { return cfg.alpha < 0.0 ? cfg.rank : cfg.alpha; }

void fill_pr_curve(ReportRow& row, const TrainTrace& trace, const TsdGroundTruth& truth) {
    for (const LtsdSnapshot& snap : trace.ltsd_snapshots) {
        PrScore sc = pr_score(snap.indices, truth);
        row.pr_curve.emplace_back(snap.step, sc.precision, sc.recall);
    }
}

void fill_losses(ReportRow& row, const SeedContext& ctx, const Matrix& final_weight) {
    row.final_train_loss = dense_loss(ctx.task, final_weight, ctx.task.train);
    row.final_val_loss = dense_loss(ctx.task, final_weight, ctx.task.val);
}

std::vector<int> prediction_of(const TrainTrace& trace, const SvdFactors& f) {
    if (trace.final_state.dash) return trace.final_state.dash->indices;
    if (!trace.ltsd_snapshots.empty()) return trace.ltsd_snapshots.back().indices;
    ChangeRates cr = change_rates(f, effective_delta(trace.final_state));
    return top_k(cr, std::min(8, cr.k()));
}

ReportRow run_job(const ExperimentConfig& cfg, const SeedContext& ctx, const Cell& cell) {
    const std::uint64_t seed_u = static_cast<std::uint64_t>(ctx.seed_value);
    const std::uint64_t adapter_seed = mix_seed(mix_seed(cfg.train.seed, kStreamAdapterInit), seed_u);
    const std::uint64_t pick_seed =
        mix_seed(mix_seed(cfg.train.seed, cell.method == RunMethod::init ? kStreamInitPick : kStreamDirectionPick),
                 seed_u);
    const double alpha = effective_alpha(cfg);

    TrainConfig tc = cfg.train;
    tc.seed = mix_seed(mix_seed(cfg.train.seed, kStreamTrainSeed), seed_u);
    tc.t_prelaunch = std::min(cell.t, tc.steps);
    tc.s_dash = cell.s;

    ReportRow row;
    row.method = to_string(cell.method);
    row.mode = cell.mode;
    row.t = cell.t;
    row.s = cell.s;
    row.seed = ctx.seed_value;
    row.spectrum = ctx.spectrum;

    if (cell.method == RunMethod::full_ft) {
        Matrix w_ft = train_full(ctx.task.base_w, ctx.task, tc);
        fill_losses(row, ctx, w_ft);
        ChangeRates dtsd = change_rates(ctx.factors, sub(w_ft, ctx.task.base_w), cfg.epsilon);
        PrScore sc = pr_score(top_k(dtsd, std::min(8, dtsd.k())), ctx.truth);
        row.precision = sc.precision;
        row.recall = sc.recall;
        return row;
    }

    MethodRun run = run_method(cell.method, cell.mode, ctx.task, ctx.factors, tc, cfg.rank, alpha, adapter_seed,
                               pick_seed);
    const TrainTrace& trace = run.trace;
    fill_losses(row, ctx, merged_weight(trace.final_state));
    std::vector<int> pred = run.selected.empty() ? prediction_of(trace, ctx.factors) : run.selected;
    PrScore sc = pr_score(pred, ctx.truth);
    row.precision = sc.precision;
    row.recall = sc.recall;
    row.loss_curve = trace.losses;
    row.val_curve = trace.val_losses;
    fill_pr_curve(row, trace, ctx.truth);

    if (trace.final_state.dash) {
        const std::vector<int>& ltsd = trace.final_state.dash->indices;
        ChangeRates dtsd = change_rates(ctx.factors, effective_delta(trace.final_state), cfg.epsilon);
        AlignmentRow al = alignment(ltsd, dtsd, ctx.truth, static_cast<int>(ltsd.size()));
        row.dtsd_ltsd = al.dtsd_cap_ltsd;
        row.tsd_ltsd = al.tsd_cap_ltsd;
        row.tsd_dtsd = al.tsd_cap_dtsd;
        try {
            AmpReport amp = amplification(ctx.task.base_w, trace.final_state);
            row.amp_all = amp.amp_all;
            row.amp_ab = amp.amp_ab;
            row.amp_dash = amp.amp_dash;
        } catch (const DegenerateProjection&) {
            // reported as missing data rather than a spurious factor
        }
    }
    return row;
}

bool row_order(const ReportRow& a, const ReportRow& b) {
    return std::tie(a.method, a.mode, a.t, a.s, a.seed) < std::tie(b.method, b.mode, b.t, b.s, b.seed);
}

}  // namespace

std::vector<ReportRow> run_matrix(const ExperimentConfig& cfg) {
    if (cfg.methods.empty()) throw InvalidArgument("run_matrix: no methods configured");
    if (cfg.seeds.empty()) throw InvalidArgument("run_matrix: no seeds configured");

    std::vector<DirectionMode> dmodes = cfg.direction_modes.empty() ? std::vector<DirectionMode>{DirectionMode::tsd}
                                                                    : cfg.direction_modes;
    std::vector<InitMode> imodes = cfg.init_modes.empty() ? std::vector<InitMode>{InitMode::tsd} : cfg.init_modes;
    std::vector<int> tsweep = cfg.t_sweep.empty() ? std::vector<int>{cfg.train.t_prelaunch} : cfg.t_sweep;
    std::vector<int> ssweep = cfg.s_sweep.empty() ? std::vector<int>{cfg.train.s_dash} : cfg.s_sweep;

    std::vector<Cell> cells;
    for (RunMethod m : cfg.methods) {
        switch (m) {
            case RunMethod::full_ft:
            case RunMethod::lora:
                cells.push_back({m, "-", cfg.train.t_prelaunch, cfg.train.s_dash});
                break;
            case RunMethod::tsd:
                cells.push_back({m, "-", cfg.train.t_prelaunch, cfg.train.s_dash});
                break;
            case RunMethod::dash:
                for (DirectionMode dm : dmodes)
                    for (int t : tsweep)
                        for (int s : ssweep) cells.push_back({m, to_string(dm), t, s});
                break;
            case RunMethod::init:
                for (InitMode im : imodes)
                    cells.push_back({m, to_string(im), cfg.train.t_prelaunch, cfg.rank});
                break;
        }
    }

    // Shared per-seed contexts keep the comparisons paired.
    std::vector<SeedContext> contexts(cfg.seeds.size());
    std::vector<std::pair<int, int>> jobs;  // (seed index, cell index)
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si)
        for (std::size_t ci = 0; ci < cells.size(); ++ci) jobs.emplace_back(static_cast<int>(si), static_cast<int>(ci));

    std::vector<ReportRow> rows(jobs.size());
    std::atomic<std::size_t> next_ctx{0}, next_job{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mu;

    auto record_error = [&](const std::string& msg) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!failed.exchange(true)) first_error = msg;
    };

    auto worker = [&](bool build_contexts) {
        if (build_contexts) {
            while (true) {
                std::size_t i = next_ctx.fetch_add(1);
                if (i >= contexts.size() || failed.load()) break;
                try {
                    contexts[i] = make_seed_context(cfg, cfg.seeds[i]);
                } catch (const std::exception& e) {
                    record_error(e.what());
                }
            }
            return;
        }
        while (true) {
            std::size_t i = next_job.fetch_add(1);
            if (i >= jobs.size() || failed.load()) break;
            try {
                rows[i] = run_job(cfg, contexts[jobs[i].first], cells[jobs[i].second]);
            } catch (const std::exception& e) {
                record_error(e.what());
            }
        }
    };

    const int threads = std::max(1, std::min<int>(thread_budget(), static_cast<int>(jobs.size())));
    auto run_pool = [&](bool build_contexts) {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker, build_contexts);
        for (auto& th : pool) th.join();
    };
    run_pool(true);
    if (!failed.load()) run_pool(false);
    if (failed.load()) throw Error("run_matrix: " + first_error);

    std::sort(rows.begin(), rows.end(), row_order);
    return rows;
}

const char* const kReportCsvHeader =
    "method,mode,t,s,seed,final_train_loss,final_val_loss,precision,recall,dtsd_ltsd,tsd_ltsd,tsd_dtsd,"
    "amp_all,amp_ab,amp_dash";

namespace {

void put_opt(std::ostream& os, const std::optional<double>& v) {
    os << ",";
    if (v) os << format_double(*v);
}

std::optional<double> parse_opt(const std::string& cell) {
    if (cell.empty()) return std::nullopt;
    return std::stod(cell);
}

std::string sanitize(const std::string& s) { return s == "-" ? "base" : s; }

void write_plotdata(const std::vector<ReportRow>& rows, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::set<long long> spectra_done;
    for (const ReportRow& row : rows) {
        if (!row.spectrum.empty() && !spectra_done.count(row.seed)) {
            spectra_done.insert(row.seed);
            std::ofstream os(dir / ("spectrum_seed" + std::to_string(row.seed) + ".csv"));
            if (!os) throw IoError("cannot write spectrum file in " + dir.string());
            os << "index,sigma,signed_delta,abs_delta,scaled_rate,rank\n";
            for (const SpectrumPoint& p : row.spectrum) {
                os << p.index << "," << format_double(p.sigma) << "," << format_double(p.signed_delta) << ","
                   << format_double(p.abs_delta) << "," << format_double(p.scaled) << "," << p.rank << "\n";
            }
        }
        const std::string stem = row.method + "_" + sanitize(row.mode) + "_t" + std::to_string(row.t) + "_s" +
                                 std::to_string(row.s) + "_seed" + std::to_string(row.seed);
        if (!row.loss_curve.empty()) {
            std::ofstream os(dir / ("loss_" + stem + ".csv"));
            if (!os) throw IoError("cannot write loss curve in " + dir.string());
            os << "step,loss,val_loss\n";
            std::size_t vi = 0;
            for (std::size_t i = 0; i < row.loss_curve.size(); ++i) {
                const int step = static_cast<int>(i) + 1;
                os << step << "," << format_double(row.loss_curve[i]) << ",";
                if (vi < row.val_curve.size() && row.val_curve[vi].first == step)
                    os << format_double(row.val_curve[vi++].second);
                os << "\n";
            }
        }
        if (!row.pr_curve.empty()) {
            std::ofstream os(dir / ("pr_" + stem + ".csv"));
            if (!os) throw IoError("cannot write pr curve in " + dir.string());
            os << "step,precision,recall\n";
            for (const auto& [step, p, r] : row.pr_curve)
                os << step << "," << format_double(p) << "," << format_double(r) << "\n";
        }
    }
}

}  // namespace

void write_report(const std::vector<ReportRow>& rows, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string());

    {
        std::ofstream os(out_dir / "report.csv");
        if (!os) throw IoError("cannot write " + (out_dir / "report.csv").string());
        os << kReportCsvHeader << "\n";
        for (const ReportRow& r : rows) {
            os << r.method << "," << r.mode << "," << r.t << "," << r.s << "," << r.seed << ","
               << format_double(r.final_train_loss) << "," << format_double(r.final_val_loss);
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
    {
        nlohmann::json arr = nlohmann::json::array();
        auto opt_json = [](const std::optional<double>& v) {
            return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
        };
        for (const ReportRow& r : rows) {
            nlohmann::json obj;
            obj["method"] = r.method;
            obj["mode"] = r.mode;
            obj["t"] = r.t;
            obj["s"] = r.s;
            obj["seed"] = r.seed;
            obj["final_train_loss"] = r.final_train_loss;
            obj["final_val_loss"] = r.final_val_loss;
            obj["precision"] = opt_json(r.precision);
            obj["recall"] = opt_json(r.recall);
            obj["dtsd_ltsd"] = opt_json(r.dtsd_ltsd);
            obj["tsd_ltsd"] = opt_json(r.tsd_ltsd);
            obj["tsd_dtsd"] = opt_json(r.tsd_dtsd);
            obj["amp_all"] = opt_json(r.amp_all);
            obj["amp_ab"] = opt_json(r.amp_ab);
            obj["amp_dash"] = opt_json(r.amp_dash);
            arr.push_back(std::move(obj));
        }
        std::ofstream os(out_dir / "report.json");
        if (!os) throw IoError("cannot write " + (out_dir / "report.json").string());
        os << arr.dump(2) << "\n";
    }
    write_plotdata(rows, out_dir / "plotdata");
}

std::vector<ReportRow> parse_report_csv(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw IoError("cannot read " + file.string());
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty report: " + file.string());
    if (line != kReportCsvHeader) throw IoError("unexpected report header in " + file.string());

    std::vector<ReportRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::stringstream ss(line);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        while (cells.size() < 15) cells.emplace_back();  // trailing empties
        if (cells.size() != 15) throw IoError("bad report row '" + line + "' in " + file.string());
        ReportRow r;
        r.method = cells[0];
        r.mode = cells[1];
        r.t = std::stoi(cells[2]);
        r.s = std::stoi(cells[3]);
        r.seed = std::stoll(cells[4]);
        r.final_train_loss = std::stod(cells[5]);
        r.final_val_loss = std::stod(cells[6]);
        r.precision = parse_opt(cells[7]);
        r.recall = parse_opt(cells[8]);
        r.dtsd_ltsd = parse_opt(cells[9]);
        r.tsd_ltsd = parse_opt(cells[10]);
        r.tsd_dtsd = parse_opt(cells[11]);
        r.amp_all = parse_opt(cells[12]);
        r.amp_ab = parse_opt(cells[13]);
        r.amp_dash = parse_opt(cells[14]);
        rows.push_back(std::move(r));
    }
    return rows;
}

TaskSpec task_from_config(const ConfigMap& cfg) {
    TaskSpec spec;
    spec.kind = task_kind_from_string(cfg.get_string("kind", "planted_linear"));
    spec.n = static_cast<int>(cfg.get_int("n", 16));
    spec.m = static_cast<int>(cfg.get_int("m", 32));
    for (long long v : cfg.get_int_list("planted_indices")) spec.planted_indices.push_back(static_cast<int>(v));
    spec.planted_coeffs = cfg.get_double_list("planted_coeffs");
    spec.noise_std = cfg.get_double("noise_std", 0.0);
    spec.n_train = static_cast<int>(cfg.get_int("n_train", 256));
    spec.n_val = static_cast<int>(cfg.get_int("n_val", 64));
    const std::uint64_t master = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    spec.seed = static_cast<std::uint64_t>(cfg.get_int("task_seed", static_cast<long long>(master)));
    return spec;
}

TrainConfig train_from_config(const ConfigMap& cfg) {
    TrainConfig tc;
    tc.lr = cfg.get_double("lr", 0.01);
    tc.steps = static_cast<int>(cfg.get_int("steps", 200));
    tc.batch = static_cast<int>(cfg.get_int("batch", 16));
    tc.optimizer = optimizer_from_string(cfg.get_string("optimizer", "adam"));
    // the default pre-launch length clamps to short runs; an explicit key
    // that contradicts steps is a config error
    const bool explicit_t = cfg.has("t_prelaunch");
    tc.t_prelaunch = static_cast<int>(cfg.get_int("t_prelaunch", std::min(100, tc.steps)));
    tc.s_dash = static_cast<int>(cfg.get_int("s_dash", 8));
    tc.record_every = static_cast<int>(cfg.get_int("record_every", 100));
    const std::uint64_t master = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    tc.seed = static_cast<std::uint64_t>(cfg.get_int("train_seed", static_cast<long long>(master)));
    if (tc.lr < 0.0) throw ConfigError("lr must be non-negative");
    if (tc.steps < 1) throw ConfigError("steps must be positive");
    if (tc.batch < 1) throw ConfigError("batch must be positive");
    if (tc.t_prelaunch < 0) throw ConfigError("t_prelaunch must be non-negative");
    if (explicit_t && tc.t_prelaunch > tc.steps) throw ConfigError("t_prelaunch exceeds steps");
    if (tc.s_dash < 1) throw ConfigError("s_dash must be positive");
    if (tc.record_every < 1) throw ConfigError("record_every must be positive");
    return tc;
}

ExperimentConfig experiment_from_config(const ConfigMap& cfg) {
    ExperimentConfig ec;
    ec.task = task_from_config(cfg);
    ec.train = train_from_config(cfg);
    for (const std::string& s : cfg.get_string_list("methods")) ec.methods.push_back(run_method_from_string(s));
    for (const std::string& s : cfg.get_string_list("direction_modes"))
        ec.direction_modes.push_back(direction_mode_from_string(s));
    for (const std::string& s : cfg.get_string_list("init_modes")) ec.init_modes.push_back(init_mode_from_string(s));
    for (long long v : cfg.get_int_list("t_sweep")) ec.t_sweep.push_back(static_cast<int>(v));
    for (long long v : cfg.get_int_list("s_sweep")) ec.s_sweep.push_back(static_cast<int>(v));
    ec.seeds = cfg.get_int_list("seeds");
    if (ec.seeds.empty()) ec.seeds = {0};
    ec.out_dir = cfg.get_string("out_dir", "out");
    ec.rank = static_cast<int>(cfg.get_int("r", 4));
    ec.alpha = cfg.get_double("alpha", -1.0);
    ec.epsilon = cfg.get_double("epsilon", kDefaultEpsilon);
    if (ec.rank < 1) throw ConfigError("r must be positive");
    return ec;
}

}  // namespace tsdlab
