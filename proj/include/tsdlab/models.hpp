#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "tsdlab/adapters.hpp"
#include "tsdlab/matrix.hpp"
#include "tsdlab/spectral.hpp"

namespace tsdlab {

enum class TaskKind { planted_linear, planted_mlp };
enum class OptimizerKind { sgd, adam };

std::string to_string(TaskKind k);
std::string to_string(OptimizerKind o);
TaskKind task_kind_from_string(const std::string& s);
OptimizerKind optimizer_from_string(const std::string& s);

// Synthetic task whose teacher weight W* = W + sum_i c_i u_i v_i^T differs
// from the base only along chosen core directions, so the ground-truth
// task-specific directions are known analytically.
struct TaskSpec {
    TaskKind kind = TaskKind::planted_linear;
    int n = 16;
    int m = 32;
    std::vector<int> planted_indices;
    std::vector<double> planted_coeffs;
    double noise_std = 0.0;
    int n_train = 256;
    int n_val = 64;
    std::uint64_t seed = 0;
};

struct Dataset {
    Matrix x;  // n_samples x m
    Matrix y;  // n_samples x n (or x readout rows for the MLP task)
};

struct TrainConfig {
    double lr = 0.01;
    int steps = 100;
    int batch = 16;
    OptimizerKind optimizer = OptimizerKind::adam;
    int t_prelaunch = 100;
    int s_dash = 8;
    int record_every = 100;
    std::uint64_t seed = 0;
};

struct LtsdSnapshot {
    int step = 0;
    std::vector<int> indices;  // top-8 core directions by |delta| of current dW
};

struct TrainTrace {
    std::vector<double> losses;                        // one per step
    std::vector<std::pair<int, double>> val_losses;    // every record_every steps
    std::vector<LtsdSnapshot> ltsd_snapshots;
    AdapterState final_state;
};

struct Task {
    TaskSpec spec;
    Matrix base_w;
    Matrix w_star;
    Dataset train;
    Dataset val;
    Matrix readout;  // fixed second layer, planted_mlp only (empty otherwise)
};

Task gen_task(const TaskSpec& spec);

// Adapted-layer forward: x * merged_weight^T (row-sample convention).
Matrix forward(const AdapterState& s, const Matrix& x);

// Full model prediction for the task's architecture.
Matrix model_forward(const Task& task, const AdapterState& s, const Matrix& x);

double loss_mse(const Matrix& pred, const Matrix& target);

// Gradients of the batch MSE w.r.t. trainable parameters only; base and
// dash directions never receive gradients.
struct Grads {
    Matrix da;
    Matrix db;
    std::vector<double> ddsigma;  // empty when no dash term is attached
};

Grads grads(const AdapterState& s, const Dataset& batch);                        // linear layer
Grads grads(const AdapterState& s, const Dataset& batch, const Matrix& readout); // tanh MLP

// Optimizer over (a, b, dsigma). Adam uses beta1=0.9, beta2=0.999, eps=1e-8.
class ParamOptimizer {
public:
    ParamOptimizer(OptimizerKind kind, double lr);
    void step(AdapterState& s, const Grads& g);
    // Drops moments for parameters that were replaced (tsd phase switch);
    // dsigma slots are always fresh because the term is created at the switch.
    void reset_core_slots();

private:
    struct Slot {
        std::vector<double> m, v;
        long long t = 0;
    };
    void apply(std::span<double> p, std::span<const double> g, Slot& slot);

    OptimizerKind kind_;
    double lr_;
    Slot a_, b_, dsigma_;
};

// Chooses dash directions at the phase switch; default is top_k(cr, s_dash).
using DirectionSelector = std::function<std::vector<int>(const ChangeRates&, const SvdFactors&)>;

// Runs cfg.steps optimizer steps with seeded epoch shuffling. For methods
// dash/tsd the phase switch happens after step t_prelaunch (when it is
// strictly before the last step); change rates of the current effective
// delta against f pick the launched directions.
TrainTrace train(AdapterState state, const Task& task, const TrainConfig& cfg, const SvdFactors& f,
                 const DirectionSelector& dash_selector = {});

// Fully fine-tunes a dense copy of w with the same optimizer; the W* estimate.
Matrix train_full(const Matrix& w, const Task& task, const TrainConfig& cfg);

// Loss of an arbitrary dense weight on a dataset under the task architecture.
double dense_loss(const Task& task, const Matrix& w, const Dataset& data);

}  // namespace tsdlab
