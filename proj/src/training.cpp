#include "zz/training.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

namespace zz {

void TrainConfig::validate() const
{
    if (!(lr > 0.0))
        throw std::invalid_argument("lr must be > 0");
    if (epochs < 1)
        throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1)
        throw std::invalid_argument("batch size must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0))
        throw std::invalid_argument("invalid Adam constants");
    for (const auto& [epoch, mult] : schedule)
        if (epoch < 0 || !(mult > 0.0))
            throw std::invalid_argument("invalid schedule entry");
}

double loss_l2(Complex pred, const Rotation& truth) { return std::norm(pred - truth.value()); }

double learning_rate(const TrainConfig& cfg, int epoch)
{
    double lr = cfg.lr;
    for (const auto& [at, mult] : cfg.schedule)
        if (epoch >= at)
            lr *= mult;
    return lr;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
               const TrainConfig& cfg, const std::vector<bool>* eta_mask)
{
    if (grads.size() != params.size())
        throw std::invalid_argument("adam_step: size mismatch");
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
        state.step = 0;
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * grads[k];
        state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * grads[k] * grads[k];
        const double mh = state.m[k] / c1;
        const double vh = state.v[k] / c2;
        params[k] -= lr * mh / (std::sqrt(vh) + cfg.eps);
        if (eta_mask && (*eta_mask)[k] && params[k] < 0.0)
            params[k] = 0.0;
    }
}

Complex predict(const Model& model, const CloudPair& pair) { return rotation_head(pair, model); }

std::pair<Complex, double> loss_and_gradient(const Model& model, const CloudPair& pair, const Rotation& truth,
                                             std::span<double> grad)
{
    if (grad.size() != model.parameter_count())
        throw std::invalid_argument("gradient buffer has the wrong size");
    Tape t;
    const ParamBinding p = model.params().binding(grad.data());
    const Var pred = graph::rotation_head(t, model, t.leaf(as_multivector(pair.z)), t.leaf(as_multivector(pair.x)), p);
    const Var loss = op::squared_error(t, pred, truth.value());
    t.backward(loss);
    return {t.value(pred).data[0], t.value(loss).data[0].real()};
}

std::string EvalReport::to_json() const
{
    nlohmann::json j = {{"count", count},  {"mean_error", mean_error}, {"mean_loss", mean_loss},
                        {"acc_1deg", acc1}, {"acc_5deg", acc5},         {"acc_10deg", acc10}};
    return j.dump();
}

EvalReport summarize(std::span<const Complex> predictions, std::span<const Rotation> truths)
{
    if (predictions.size() != truths.size())
        throw std::invalid_argument("summarize: size mismatch");
    EvalReport r;
    r.count = predictions.size();
    if (r.count == 0)
        return r;
    const double t1 = angle_threshold(1.0), t5 = angle_threshold(5.0), t10 = angle_threshold(10.0);
    for (std::size_t k = 0; k < r.count; ++k) {
        const double e = angular_error(predictions[k], truths[k]);
        r.mean_error += e;
        r.mean_loss += e * e;
        r.acc1 += e <= t1;
        r.acc5 += e <= t5;
        r.acc10 += e <= t10;
    }
    const double n = static_cast<double>(r.count);
    r.mean_error /= n;
    r.mean_loss /= n;
    r.acc1 /= n;
    r.acc5 /= n;
    r.acc10 /= n;
    return r;
}

namespace {

template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& body)
{
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, count));
    if (workers == 1) {
        for (std::size_t k = 0; k < count; ++k)
            body(0, k);
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t k = w; k < count; k += workers)
                body(w, k);
        });
    for (auto& th : pool)
        th.join();
}

double l2_norm(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v)
        s += x * x;
    return std::sqrt(s);
}

}  // namespace

EvalReport evaluate(const Model& model, const std::vector<ToyExample>& examples, std::size_t threads)
{
    std::vector<Complex> preds(examples.size());
    std::vector<Rotation> truths(examples.size());
    parallel_for(examples.size(), threads, [&](std::size_t, std::size_t k) {
        preds[k] = predict(model, examples[k].pair);
        truths[k] = examples[k].theta;
    });
    return summarize(preds, truths);
}

std::string EpochMetrics::to_json() const
{
    nlohmann::json j = {
        {"epoch", epoch},
        {"lr", lr},
        {"train_loss", train_loss},
        {"val", nlohmann::json::parse(val.to_json())},
        {"seconds", seconds},
    };
    return j.dump();
}

NonFiniteError::NonFiniteError(int epoch_, std::size_t batch_, double param_norm_)
  : std::runtime_error("non-finite loss at epoch " + std::to_string(epoch_) + ", batch " + std::to_string(batch_) +
                       ", parameter norm " + std::to_string(param_norm_)),
    epoch(epoch_), batch(batch_), param_norm(param_norm_)
{ }

TrainState train(Model& model, const std::vector<ToyExample>& train_set, const std::vector<ToyExample>& val_set,
                 const TrainConfig& cfg, const EpochCallback& on_epoch, TrainState state)
{
    cfg.validate();
    if (train_set.empty())
        throw std::invalid_argument("training set is empty");
    const std::size_t n_params = model.parameter_count();
    const std::size_t workers = std::max<std::size_t>(1, cfg.threads);
    std::vector<std::vector<double>> worker_grads(workers, std::vector<double>(n_params));
    std::vector<double> worker_loss(workers);
    std::vector<double> grad(n_params);

    std::vector<double> best_params;
    double best_val = INFINITY;
    int since_best = 0;

    for (int epoch = state.next_epoch; epoch < cfg.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        const double lr = learning_rate(cfg, epoch);

        std::vector<std::size_t> order(train_set.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle(cfg.seed, 0x5348554646ull + static_cast<std::uint64_t>(epoch));
        for (std::size_t k = order.size(); k > 1; --k)
            std::swap(order[k - 1], order[shuffle.below(k)]);

        double epoch_loss = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - start);
            for (auto& g : worker_grads)
                std::fill(g.begin(), g.end(), 0.0);
            std::fill(worker_loss.begin(), worker_loss.end(), 0.0);
            parallel_for(count, workers, [&](std::size_t w, std::size_t k) {
                const auto& ex = train_set[order[start + k]];
                worker_loss[w] += loss_and_gradient(model, ex.pair, ex.theta, worker_grads[w]).second;
            });

            double batch_loss = 0.0;
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t w = 0; w < workers; ++w) {
                batch_loss += worker_loss[w];
                for (std::size_t k = 0; k < n_params; ++k)
                    grad[k] += worker_grads[w][k];
            }
            const double inv = 1.0 / static_cast<double>(count);
            bool finite = std::isfinite(batch_loss);
            for (auto& g : grad) {
                g *= inv;
                finite = finite && std::isfinite(g);
            }
            if (!finite)
                throw NonFiniteError(epoch, batch_index, l2_norm(model.params().values()));
            epoch_loss += batch_loss;
            adam_step(model.params().values(), grad, state.adam, lr, cfg, &model.params().eta_mask());
        }

        EpochMetrics metrics;
        metrics.epoch = epoch;
        metrics.lr = lr;
        metrics.train_loss = epoch_loss / static_cast<double>(train_set.size());
        if (!val_set.empty())
            metrics.val = evaluate(model, val_set, workers);
        metrics.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        state.next_epoch = epoch + 1;
        if (on_epoch)
            on_epoch(metrics, model, state);

        if (cfg.early_stop && !val_set.empty()) {
            if (metrics.val.mean_loss < best_val) {
                best_val = metrics.val.mean_loss;
                best_params.assign(model.params().values().begin(), model.params().values().end());
                since_best = 0;
            } else if (++since_best >= cfg.patience) {
                break;
            }
        }
    }
    if (cfg.early_stop && !best_params.empty())
        std::copy(best_params.begin(), best_params.end(), model.params().values().begin());
    return state;
}

}  // namespace zz
