#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "tsdlab/harness.hpp"
#include "tsdlab/matrix_io.hpp"
#include "tsdlab/metrics.hpp"
#include "tsdlab/models.hpp"

namespace py = pybind11;
using namespace tsdlab;

namespace {

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw InvalidArgument("expected a 2-D float array");
    Matrix m(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
    std::memcpy(m.data().data(), arr.data(), m.data().size() * sizeof(double));
    return m;
}

py::array_t<double> to_numpy(const Matrix& m) {
    py::array_t<double> arr({m.rows(), m.cols()});
    std::memcpy(arr.mutable_data(), m.data().data(), m.data().size() * sizeof(double));
    return arr;
}

TrainConfig config_from_kwargs(double lr, int steps, int batch, const std::string& optimizer, int t_prelaunch,
                               int s_dash, int record_every, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.lr = lr;
    cfg.steps = steps;
    cfg.batch = batch;
    cfg.optimizer = optimizer_from_string(optimizer);
    cfg.t_prelaunch = t_prelaunch;
    cfg.s_dash = s_dash;
    cfg.record_every = record_every;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_tsdlab, m) {
    m.doc() = "Spectral weight analysis and dash-style low-rank adaptation on planted tasks";

    py::register_exception<Error>(m, "TsdlabError", PyExc_RuntimeError);

    py::class_<SvdFactors>(m, "SvdFactors")
        .def_property_readonly("u", [](const SvdFactors& f) { return to_numpy(f.u); })
        .def_property_readonly("sigma", [](const SvdFactors& f) { return f.sigma; })
        .def_property_readonly("vt", [](const SvdFactors& f) { return to_numpy(f.vt); })
        .def_property_readonly("k", &SvdFactors::k);

    py::class_<ChangeRates>(m, "ChangeRates")
        .def_property_readonly("delta", [](const ChangeRates& c) { return c.delta; })
        .def_property_readonly("signed_delta", [](const ChangeRates& c) { return c.signed_; })
        .def_property_readonly("ranking", [](const ChangeRates& c) { return c.ranking; })
        .def_readonly("epsilon", &ChangeRates::epsilon);

    py::class_<AdapterState>(m, "AdapterState")
        .def_property_readonly("method", [](const AdapterState& s) { return to_string(s.method); })
        .def_property_readonly("phase", [](const AdapterState& s) { return to_string(s.phase); })
        .def_property_readonly("rank", [](const AdapterState& s) { return s.core.rank; })
        .def_property_readonly("alpha", [](const AdapterState& s) { return s.core.alpha; })
        .def_property_readonly("base", [](const AdapterState& s) { return to_numpy(s.base); })
        .def_property_readonly("a", [](const AdapterState& s) { return to_numpy(s.core.a); })
        .def_property_readonly("b", [](const AdapterState& s) { return to_numpy(s.core.b); })
        .def_property_readonly("dash_indices",
                               [](const AdapterState& s) {
                                   return s.dash ? s.dash->indices : std::vector<int>{};
                               })
        .def_property_readonly("dsigma",
                               [](const AdapterState& s) {
                                   return s.dash ? s.dash->dsigma : std::vector<double>{};
                               })
        .def_property_readonly("split_indices", [](const AdapterState& s) { return s.split_indices; });

    py::class_<Task>(m, "Task")
        .def_property_readonly("base_w", [](const Task& t) { return to_numpy(t.base_w); })
        .def_property_readonly("w_star", [](const Task& t) { return to_numpy(t.w_star); })
        .def_property_readonly("train_x", [](const Task& t) { return to_numpy(t.train.x); })
        .def_property_readonly("train_y", [](const Task& t) { return to_numpy(t.train.y); })
        .def_property_readonly("val_x", [](const Task& t) { return to_numpy(t.val.x); })
        .def_property_readonly("val_y", [](const Task& t) { return to_numpy(t.val.y); });

    py::class_<TrainTrace>(m, "TrainTrace")
        .def_property_readonly("losses", [](const TrainTrace& t) { return t.losses; })
        .def_property_readonly("val_losses", [](const TrainTrace& t) { return t.val_losses; })
        .def_property_readonly("ltsd_snapshots",
                               [](const TrainTrace& t) {
                                   std::vector<std::pair<int, std::vector<int>>> out;
                                   for (const LtsdSnapshot& s : t.ltsd_snapshots) out.emplace_back(s.step, s.indices);
                                   return out;
                               })
        .def_property_readonly("final_state", [](const TrainTrace& t) { return t.final_state; });

    py::class_<TsdGroundTruth>(m, "TsdGroundTruth")
        .def_property_readonly("rates", [](const TsdGroundTruth& t) { return t.rates; })
        .def_property_readonly("top4", [](const TsdGroundTruth& t) { return t.top4; })
        .def_property_readonly("top16", [](const TsdGroundTruth& t) { return t.top16; });

    m.def(
        "svd", [](const py::array_t<double>& w) { return svd(to_matrix(w)); }, py::arg("w"),
        "Thin SVD with deterministic sign canonicalization.");
    m.def(
        "project_global",
        [](const SvdFactors& f, const py::array_t<double>& a) { return to_numpy(project_global(f, a.ndim() ? to_matrix(a) : Matrix()).coeffs); },
        py::arg("factors"), py::arg("a"), "Coordinates of a on the global bases of the factored matrix.");
    m.def(
        "change_rates",
        [](const SvdFactors& f, const py::array_t<double>& dw, double epsilon) {
            return change_rates(f, to_matrix(dw), epsilon);
        },
        py::arg("factors"), py::arg("delta_w"), py::arg("epsilon") = kDefaultEpsilon);
    m.def("top_k", &top_k, py::arg("rates"), py::arg("k"));
    m.def("scaled_rate", &scaled_rate, py::arg("delta"));
    m.def(
        "frob_norm", [](const py::array_t<double>& a) { return frob_norm(to_matrix(a)); }, py::arg("a"));

    m.def(
        "gen_task",
        [](const std::string& kind, int n, int mm, const std::vector<int>& planted_indices,
           const std::vector<double>& planted_coeffs, double noise_std, int n_train, int n_val,
           std::uint64_t seed) {
            TaskSpec spec;
            spec.kind = task_kind_from_string(kind);
            spec.n = n;
            spec.m = mm;
            spec.planted_indices = planted_indices;
            spec.planted_coeffs = planted_coeffs;
            spec.noise_std = noise_std;
            spec.n_train = n_train;
            spec.n_val = n_val;
            spec.seed = seed;
            return gen_task(spec);
        },
        py::arg("kind") = "planted_linear", py::arg("n") = 16, py::arg("m") = 32,
        py::arg("planted_indices") = std::vector<int>{}, py::arg("planted_coeffs") = std::vector<double>{},
        py::arg("noise_std") = 0.0, py::arg("n_train") = 256, py::arg("n_val") = 64, py::arg("seed") = 0);

    m.def(
        "make_lora_state",
        [](const py::array_t<double>& w, int r, double alpha, std::uint64_t seed) {
            return make_lora_state(to_matrix(w), r, alpha, seed);
        },
        py::arg("w"), py::arg("r"), py::arg("alpha"), py::arg("seed") = 0);
    m.def(
        "make_dash_state",
        [](const py::array_t<double>& w, int r, double alpha, std::uint64_t seed) {
            return make_dash_state(to_matrix(w), r, alpha, seed);
        },
        py::arg("w"), py::arg("r"), py::arg("alpha"), py::arg("seed") = 0);
    m.def(
        "make_tsd_state",
        [](const py::array_t<double>& w, int r, double alpha, std::uint64_t seed) {
            return make_tsd_state(to_matrix(w), r, alpha, seed);
        },
        py::arg("w"), py::arg("r"), py::arg("alpha"), py::arg("seed") = 0);
    m.def(
        "make_init_state",
        [](const py::array_t<double>& w, const SvdFactors& f, const std::vector<int>& indices, double alpha) {
            return make_init_state(to_matrix(w), f, indices, alpha);
        },
        py::arg("w"), py::arg("factors"), py::arg("indices"), py::arg("alpha"));
    m.def("enter_dash_phase", &enter_dash_phase, py::arg("state"), py::arg("factors"), py::arg("rates"),
          py::arg("s_count"));
    m.def(
        "effective_delta", [](const AdapterState& s) { return to_numpy(effective_delta(s)); }, py::arg("state"));
    m.def(
        "merged_weight", [](const AdapterState& s) { return to_numpy(merged_weight(s)); }, py::arg("state"));
    m.def(
        "tsd_init_split",
        [](const py::array_t<double>& w, const SvdFactors& f, const std::vector<int>& indices) {
            InitSplit split = tsd_init_split(to_matrix(w), f, indices);
            return py::make_tuple(to_numpy(split.w_res), to_numpy(split.a0), to_numpy(split.b0));
        },
        py::arg("w"), py::arg("factors"), py::arg("indices"));

    m.def(
        "train",
        [](const AdapterState& state, const Task& task, const SvdFactors& f, double lr, int steps, int batch,
           const std::string& optimizer, int t_prelaunch, int s_dash, int record_every, std::uint64_t seed) {
            return train(state, task, config_from_kwargs(lr, steps, batch, optimizer, t_prelaunch, s_dash,
                                                         record_every, seed),
                         f);
        },
        py::arg("state"), py::arg("task"), py::arg("factors"), py::arg("lr") = 0.01, py::arg("steps") = 100,
        py::arg("batch") = 16, py::arg("optimizer") = "adam", py::arg("t_prelaunch") = 100, py::arg("s_dash") = 8,
        py::arg("record_every") = 100, py::arg("seed") = 0);
    m.def(
        "train_full",
        [](const py::array_t<double>& w, const Task& task, double lr, int steps, int batch,
           const std::string& optimizer, std::uint64_t seed) {
            TrainConfig cfg = config_from_kwargs(lr, steps, batch, optimizer, 0, 8, 100, seed);
            return to_numpy(train_full(to_matrix(w), task, cfg));
        },
        py::arg("w"), py::arg("task"), py::arg("lr") = 0.01, py::arg("steps") = 100, py::arg("batch") = 16,
        py::arg("optimizer") = "adam", py::arg("seed") = 0);

    m.def(
        "ground_truth_tsd",
        [](const py::array_t<double>& w, const py::array_t<double>& w_star, double epsilon) {
            return ground_truth_tsd(to_matrix(w), to_matrix(w_star), epsilon);
        },
        py::arg("w"), py::arg("w_star"), py::arg("epsilon") = kDefaultEpsilon);
    m.def(
        "pr_score",
        [](const std::vector<int>& pred, const TsdGroundTruth& truth, int k_prec_ref, int k_rec_ref) {
            PrScore sc = pr_score(pred, truth, k_prec_ref, k_rec_ref);
            return py::make_tuple(sc.precision, sc.recall);
        },
        py::arg("pred"), py::arg("truth"), py::arg("k_prec_ref") = 16, py::arg("k_rec_ref") = 4);
    m.def(
        "alignment",
        [](const std::vector<int>& ltsd, const ChangeRates& dtsd, const TsdGroundTruth& truth, int s) {
            AlignmentRow row = alignment(ltsd, dtsd, truth, s);
            return py::make_tuple(row.dtsd_cap_ltsd, row.tsd_cap_ltsd, row.tsd_cap_dtsd);
        },
        py::arg("ltsd"), py::arg("dtsd_rates"), py::arg("truth"), py::arg("s"));
    m.def(
        "amplification",
        [](const py::array_t<double>& w, const AdapterState& state) {
            AmpReport rep = amplification(to_matrix(w), state);
            return py::make_tuple(rep.amp_all, rep.amp_ab, rep.amp_dash);
        },
        py::arg("w"), py::arg("state"));
    m.def("task_overlap", &task_overlap, py::arg("truth_a"), py::arg("truth_b"), py::arg("k"));

    m.def(
        "run_experiment",
        [](const std::string& config_text) {
            ConfigMap cfg = ConfigMap::parse_text(config_text, "<python>");
            std::vector<ReportRow> rows = run_matrix(experiment_from_config(cfg));
            py::list out;
            auto opt = [](const std::optional<double>& v) -> py::object {
                return v ? py::cast(*v) : py::none();
            };
            for (const ReportRow& r : rows) {
                py::dict d;
                d["method"] = r.method;
                d["mode"] = r.mode;
                d["t"] = r.t;
                d["s"] = r.s;
                d["seed"] = r.seed;
                d["final_train_loss"] = r.final_train_loss;
                d["final_val_loss"] = r.final_val_loss;
                d["precision"] = opt(r.precision);
                d["recall"] = opt(r.recall);
                d["amp_all"] = opt(r.amp_all);
                d["amp_ab"] = opt(r.amp_ab);
                d["amp_dash"] = opt(r.amp_dash);
                out.append(std::move(d));
            }
            return out;
        },
        py::arg("config_text"),
        "Run an experiment matrix from flat key=value config text; returns the report rows.");

    m.def(
        "save_matrix",
        [](const py::array_t<double>& a, const std::string& path) { save_matrix(to_matrix(a), path); },
        py::arg("a"), py::arg("path"));
    m.def(
        "load_matrix", [](const std::string& path) { return to_numpy(load_matrix(path)); }, py::arg("path"));
    m.def(
        "save_adapter", [](const AdapterState& s, const std::string& dir) { save_adapter(s, dir); },
        py::arg("state"), py::arg("dir"));
    m.def(
        "load_adapter", [](const std::string& dir) { return load_adapter(dir); }, py::arg("dir"));
}
