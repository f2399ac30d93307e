#include "tsdlab/adapters.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

namespace tsdlab {

std::string to_string(Method m) {
    switch (m) {
        case Method::lora: return "lora";
        case Method::dash: return "dash";
        case Method::init: return "init";
        case Method::tsd: return "tsd";
    }
    return "lora";
}

std::string to_string(Phase p) { return p == Phase::prelaunch ? "prelaunch" : "dash"; }

Method method_from_string(const std::string& s) {
    if (s == "lora") return Method::lora;
    if (s == "dash") return Method::dash;
    if (s == "init") return Method::init;
    if (s == "tsd") return Method::tsd;
    throw InvalidArgument("unknown method '" + s + "'");
}

Phase phase_from_string(const std::string& s) {
    if (s == "prelaunch") return Phase::prelaunch;
    if (s == "dash") return Phase::dash;
    throw InvalidArgument("unknown phase '" + s + "'");
}

LoraCore lora_random_init(int n, int m, int r, double alpha, std::uint64_t seed) {
    if (r < 1 || r > std::min(n, m))
        throw InvalidArgument("lora rank " + std::to_string(r) + " out of range for " + std::to_string(n) + "x" +
                              std::to_string(m));
    LoraCore core;
    core.rank = r;
    core.alpha = alpha;
    core.a = Matrix(n, r);
    core.b = Matrix(r, m);  // zero, so the effective delta starts at zero
    const double bound = std::sqrt(6.0 / n);
    Rng rng(seed);
    for (double& x : core.a.data()) x = rng.uniform(-bound, bound);
    return core;
}

Matrix effective_delta(const AdapterState& s) {
    Matrix delta = matmul(s.core.a, s.core.b);
    const double scaling = s.core.alpha / s.core.rank;
    for (double& x : delta.data()) x *= scaling;
    if (s.dash) {
        const DashTerm& d = *s.dash;
        for (std::size_t i = 0; i < d.indices.size(); ++i)
            add_outer(delta, d.dsigma[i], d.u_bar.col(static_cast<int>(i)), d.v_bar.col(static_cast<int>(i)));
    }
    return delta;
}

Matrix merged_weight(const AdapterState& s) { return add(s.base, effective_delta(s)); }

InitSplit tsd_init_split(const Matrix& w, const SvdFactors& f, const std::vector<int>& indices) {
    if (indices.empty()) throw InvalidArgument("tsd_init_split: need at least one index");
    std::set<int> seen;
    for (int idx : indices) {
        if (idx < 0 || idx >= f.k())
            throw InvalidArgument("tsd_init_split: index " + std::to_string(idx) + " out of range");
        if (!seen.insert(idx).second) throw InvalidArgument("tsd_init_split: duplicate index " + std::to_string(idx));
    }
    if (w.rows() != f.source_rows() || w.cols() != f.source_cols())
        throw ShapeMismatch("tsd_init_split: w does not match factors");

    const int r = static_cast<int>(indices.size());
    InitSplit split;
    split.indices = indices;
    split.w_res = w;
    split.a0 = Matrix(w.rows(), r);
    split.b0 = Matrix(r, w.cols());
    for (int j = 0; j < r; ++j) {
        const int idx = indices[j];
        const double root = std::sqrt(f.sigma[idx]);
        auto u = f.u.col(idx);
        add_outer(split.w_res, -f.sigma[idx], u, f.vt.row(idx));
        for (int i = 0; i < w.rows(); ++i) split.a0(i, j) = root * u[i];
        for (int c = 0; c < w.cols(); ++c) split.b0(j, c) = root * f.vt(idx, c);
    }
    return split;
}

DashTerm make_dash_term(const SvdFactors& f, const std::vector<int>& indices) {
    std::set<int> seen;
    for (int idx : indices) {
        if (idx < 0 || idx >= f.k())
            throw InvalidArgument("dash term: index " + std::to_string(idx) + " out of range");
        if (!seen.insert(idx).second) throw InvalidArgument("dash term: duplicate index " + std::to_string(idx));
    }
    DashTerm d;
    d.indices = indices;
    d.dsigma.assign(indices.size(), 0.0);
    d.u_bar = Matrix(f.source_rows(), static_cast<int>(indices.size()));
    d.v_bar = Matrix(f.source_cols(), static_cast<int>(indices.size()));
    for (std::size_t j = 0; j < indices.size(); ++j) {
        for (int i = 0; i < f.source_rows(); ++i) d.u_bar(i, static_cast<int>(j)) = f.u(i, indices[j]);
        for (int i = 0; i < f.source_cols(); ++i) d.v_bar(i, static_cast<int>(j)) = f.vt(indices[j], i);
    }
    return d;
}

AdapterState enter_dash_phase_with(AdapterState s, const SvdFactors& f, const ChangeRates& cr,
                                   const std::vector<int>& dash_indices) {
    if (s.method != Method::dash && s.method != Method::tsd)
        throw InvalidState("enter_dash_phase: method " + to_string(s.method) + " has no dash phase");
    if (s.phase != Phase::prelaunch) throw InvalidState("enter_dash_phase: already in dash phase");

    if (s.method == Method::tsd) {
        // Rebuild from the split over the top-r change-rate directions; the
        // pre-launch A,B are discarded.
        std::vector<int> split_idx = top_k(cr, s.core.rank);
        InitSplit split = tsd_init_split(s.base, f, split_idx);
        s.split_indices = split.indices;
        s.base = std::move(split.w_res);
        s.core.a = std::move(split.a0);
        s.core.b = std::move(split.b0);
    }
    s.dash = make_dash_term(f, dash_indices);
    s.phase = Phase::dash;
    return s;
}

AdapterState enter_dash_phase(AdapterState s, const SvdFactors& f, const ChangeRates& cr, int s_count) {
    return enter_dash_phase_with(std::move(s), f, cr, top_k(cr, s_count));
}

AdapterState make_lora_state(const Matrix& w, int r, double alpha, std::uint64_t seed) {
    AdapterState s;
    s.method = Method::lora;
    s.base = w;
    s.core = lora_random_init(w.rows(), w.cols(), r, alpha, seed);
    s.phase = Phase::dash;
    return s;
}

AdapterState make_dash_state(const Matrix& w, int r, double alpha, std::uint64_t seed) {
    AdapterState s = make_lora_state(w, r, alpha, seed);
    s.method = Method::dash;
    s.phase = Phase::prelaunch;
    return s;
}

AdapterState make_init_state(const Matrix& w, const SvdFactors& f, const std::vector<int>& indices, double alpha) {
    InitSplit split = tsd_init_split(w, f, indices);
    AdapterState s;
    s.method = Method::init;
    s.base = std::move(split.w_res);
    s.core.a = std::move(split.a0);
    s.core.b = std::move(split.b0);
    s.core.rank = static_cast<int>(indices.size());
    s.core.alpha = alpha;
    s.split_indices = split.indices;
    s.phase = Phase::dash;
    return s;
}

AdapterState make_tsd_state(const Matrix& w, int r, double alpha, std::uint64_t seed) {
    AdapterState s = make_lora_state(w, r, alpha, seed);
    s.method = Method::tsd;
    s.phase = Phase::prelaunch;
    return s;
}

}  // namespace tsdlab
