#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rednet/data.hpp"
#include "rednet/network.hpp"
#include "rednet/tensor.hpp"

namespace rednet {

// Mean squared error over a batch: the sum of squared differences divided
// by the batch size (not the element count). Returns the loss and
// dL/dpred = 2 (pred - target) / batch.
template <typename T>
std::pair<double, Tensor4<T>> mse_loss(const Tensor4<T>& pred, const Tensor4<T>& target);

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;  // throws ConfigError
};

// Adam with bias correction. Holds first/second moment buffers shaped like
// the parameter list it was created for.
template <typename T>
class AdamState {
public:
    explicit AdamState(std::span<const std::span<T>> params, AdamConfig cfg = {});

    // One update; params and grads must match the construction layout.
    void step(std::span<const std::span<T>> params,
              std::span<const std::span<const T>> grads);

    std::int64_t step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::int64_t t_ = 0;
    std::vector<std::vector<T>> m_, v_;
};

// Plain gradient descent: theta -= lr * g.
template <typename T>
void sgd_step(std::span<const std::span<T>> params,
              std::span<const std::span<const T>> grads, double lr);

enum class OptimizerKind { adam, sgd };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);  // throws ConfigError

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::adam;
    double lr = 1e-4;
    int iterations = 1;
    int batch = 8;
    std::uint64_t seed = 0;
    int loss_log_interval = 1;

    void validate() const;  // throws ConfigError
};

struct LossRow {
    int iteration = 0;  // 1-based
    double loss = 0.0;
};

// "iteration,loss\n" header plus one row per logged step, LF line endings.
std::string loss_trace_csv(std::span<const LossRow> rows);

// Minibatch training: uniform with-replacement batch sampling, forward,
// batch-normalized MSE, backprop, one optimizer step per iteration. The
// recorded loss is the value at the parameters *before* each step. Fully
// deterministic for a fixed config and dataset.
template <typename T>
std::vector<LossRow> train_loop(Network<T>& net, const PatchSet& data,
                                const TrainConfig& cfg);

}  // namespace rednet
