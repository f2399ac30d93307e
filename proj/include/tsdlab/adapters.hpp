#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsdlab/matrix.hpp"
#include "tsdlab/spectral.hpp"

namespace tsdlab {

enum class Method { lora, dash, init, tsd };
enum class Phase { prelaunch, dash };

std::string to_string(Method m);
std::string to_string(Phase p);
Method method_from_string(const std::string& s);
Phase phase_from_string(const std::string& s);

// Trainable low-rank pair; effective contribution is (alpha/rank) * a * b.
struct LoraCore {
    Matrix a;  // n x r
    Matrix b;  // r x m
    int rank = 0;
    double alpha = 0.0;
};

// Frozen launched directions plus their trainable coordinate deltas.
// u_bar/v_bar columns are copies from the SVD of the original pretrained W,
// taken once at launch and never updated.
struct DashTerm {
    std::vector<int> indices;
    std::vector<double> dsigma;  // starts at zero
    Matrix u_bar;                // n x s
    Matrix v_bar;                // m x s
};

// Split of W into selected core components (folded into a0 b0) and a frozen
// residual: w_res + a0 b0 == W, with a0 = U_sel sqrt(S_sel), b0 = sqrt(S_sel) V_sel^T.
struct InitSplit {
    Matrix w_res;
    Matrix a0;  // n x r
    Matrix b0;  // r x m
    std::vector<int> indices;
};

// Per-layer trainable state for one of the four methods. `base` is the
// pretrained W for lora/dash and the frozen residual for init/tsd.
struct AdapterState {
    Method method = Method::lora;
    Matrix base;
    LoraCore core;
    std::optional<DashTerm> dash;
    Phase phase = Phase::dash;
    std::vector<int> split_indices;  // populated for init/tsd after the split

    int n() const { return base.rows(); }
    int m() const { return base.cols(); }
};

// Kaiming-uniform A on [-sqrt(6/n), +sqrt(6/n)], zero B.
LoraCore lora_random_init(int n, int m, int r, double alpha, std::uint64_t seed);

// (alpha/r) AB plus, when a dash term is attached, sum_i dsigma_i u_i v_i^T
// (the dash term carries no alpha/r scaling).
Matrix effective_delta(const AdapterState& s);

// base + effective_delta; the inference-time merge.
Matrix merged_weight(const AdapterState& s);

InitSplit tsd_init_split(const Matrix& w, const SvdFactors& f, const std::vector<int>& indices);

// Builds a DashTerm over `indices` with directions copied from f.
DashTerm make_dash_term(const SvdFactors& f, const std::vector<int>& indices);

// Transition from pre-launch to dash using the top s_count change-rate
// directions. For method tsd the pre-launch A,B are discarded and base/core
// are rebuilt from the split over the top-r indices (r = core rank).
AdapterState enter_dash_phase(AdapterState s, const SvdFactors& f, const ChangeRates& cr, int s_count);

// Same transition with an explicitly chosen direction set (ablation modes).
AdapterState enter_dash_phase_with(AdapterState s, const SvdFactors& f, const ChangeRates& cr,
                                   const std::vector<int>& dash_indices);

// Fresh states. lora/init are single-phase; dash/tsd start in pre-launch.
AdapterState make_lora_state(const Matrix& w, int r, double alpha, std::uint64_t seed);
AdapterState make_dash_state(const Matrix& w, int r, double alpha, std::uint64_t seed);
AdapterState make_init_state(const Matrix& w, const SvdFactors& f, const std::vector<int>& indices, double alpha);
AdapterState make_tsd_state(const Matrix& w, int r, double alpha, std::uint64_t seed);

// Directory layout: meta.json plus TSDW files (base, a, b, and when a dash
// term is attached: dsigma, u_bar, v_bar).
void save_adapter(const AdapterState& s, const std::filesystem::path& dir);
AdapterState load_adapter(const std::filesystem::path& dir);

}  // namespace tsdlab
