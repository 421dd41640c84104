#pragma once

#include "zz/networks.hpp"
#include "zz/toydata.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace zz {

struct TrainConfig {
    double lr = 5e-3;
    /// (epoch, multiplier): from that epoch on the rate is multiplied.
    std::vector<std::pair<int, double>> schedule = {{70, 0.5}, {150, 0.5}};
    int epochs = 300;
    std::size_t batch_size = 32;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    /// Stop when the validation loss has not improved for `patience` epochs
    /// and restore the best parameters.
    bool early_stop = false;
    int patience = 20;

    void validate() const;
};

/// |pred - truth|^2.
double loss_l2(Complex pred, const Rotation& truth);

/// Learning rate used throughout epoch `epoch` (0-based).
double learning_rate(const TrainConfig& cfg, int epoch);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;
};

/// One Adam update; thresholds flagged in `eta_mask` are clamped to >= 0 afterwards.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
               const TrainConfig& cfg, const std::vector<bool>* eta_mask = nullptr);

/// Rotation estimate of the model for one pair.
Complex predict(const Model& model, const CloudPair& pair);

/// Loss of one example; adds d(loss)/d(params) into `grad`.
std::pair<Complex, double> loss_and_gradient(const Model& model, const CloudPair& pair, const Rotation& truth,
                                             std::span<double> grad);

struct EvalReport {
    std::size_t count = 0;
    double mean_error = 0.0;
    double mean_loss = 0.0;
    double acc1 = 0.0;
    double acc5 = 0.0;
    double acc10 = 0.0;

    std::string to_json() const;
};

EvalReport summarize(std::span<const Complex> predictions, std::span<const Rotation> truths);
EvalReport evaluate(const Model& model, const std::vector<ToyExample>& examples, std::size_t threads = 1);

struct EpochMetrics {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    EvalReport val;
    double seconds = 0.0;

    std::string to_json() const;
};

/// Everything needed to continue training where it stopped.
struct TrainState {
    int next_epoch = 0;
    AdamState adam;
};

/// Raised when a batch produces a non-finite loss or gradient.
class NonFiniteError : public std::runtime_error {
public:
    NonFiniteError(int epoch, std::size_t batch, double param_norm);
    int epoch;
    std::size_t batch;
    double param_norm;
};

using EpochCallback = std::function<void(const EpochMetrics&, const Model&, const TrainState&)>;

/// Mini-batch Adam on the l2 rotation loss. With one thread the result is a
/// deterministic function of (model, data, cfg, state).
TrainState train(Model& model, const std::vector<ToyExample>& train_set, const std::vector<ToyExample>& val_set,
                 const TrainConfig& cfg, const EpochCallback& on_epoch = {}, TrainState state = {});

}  // namespace zz
