#include "rednet/optim.hpp"

#include <cmath>
#include <cstdio>
#include <optional>

#include "rednet/rng.hpp"

namespace rednet {

template <typename T>
std::pair<double, Tensor4<T>> mse_loss(const Tensor4<T>& pred, const Tensor4<T>& target) {
    require_same_shape(pred, target, "mse loss");
    const double inv_batch = 1.0 / pred.n();
    Tensor4<T> grad(pred.n(), pred.c(), pred.h(), pred.w());
    const T* pp = pred.data();
    const T* pt = target.data();
    T* pg = grad.data();
    double loss = 0.0;
    const std::size_t total = pred.size();
    for (std::size_t i = 0; i < total; ++i) {
        const double d = static_cast<double>(pp[i]) - static_cast<double>(pt[i]);
        loss += d * d;
        pg[i] = static_cast<T>(2.0 * d * inv_batch);
    }
    return {loss * inv_batch, std::move(grad)};
}

void AdamConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("adam: lr must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("adam: beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam: beta2 must be in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("adam: epsilon must be > 0");
}

template <typename T>
AdamState<T>::AdamState(std::span<const std::span<T>> params, AdamConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
        m_.emplace_back(p.size(), T(0));
        v_.emplace_back(p.size(), T(0));
    }
}

template <typename T>
void AdamState<T>::step(std::span<const std::span<T>> params,
                        std::span<const std::span<const T>> grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw ShapeError("adam step: parameter list does not match optimizer state");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != m_[i].size() || grads[i].size() != m_[i].size()) {
            throw ShapeError("adam step: parameter " + std::to_string(i) +
                             " changed size since construction");
        }
        T* p = params[i].data();
        const T* g = grads[i].data();
        T* m = m_[i].data();
        T* v = v_[i].data();
        for (std::size_t k = 0; k < params[i].size(); ++k) {
            const double gk = static_cast<double>(g[k]);
            const double mk = cfg_.beta1 * static_cast<double>(m[k]) + (1.0 - cfg_.beta1) * gk;
            const double vk =
                cfg_.beta2 * static_cast<double>(v[k]) + (1.0 - cfg_.beta2) * gk * gk;
            m[k] = static_cast<T>(mk);
            v[k] = static_cast<T>(vk);
            const double mhat = mk / bc1;
            const double vhat = vk / bc2;
            p[k] = static_cast<T>(static_cast<double>(p[k]) -
                                  cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon));
        }
    }
}

template <typename T>
void sgd_step(std::span<const std::span<T>> params,
              std::span<const std::span<const T>> grads, double lr) {
    if (params.size() != grads.size()) {
        throw ShapeError("sgd step: parameter and gradient lists differ in length");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != grads[i].size()) {
            throw ShapeError("sgd step: parameter " + std::to_string(i) + " size mismatch");
        }
        T* p = params[i].data();
        const T* g = grads[i].data();
        for (std::size_t k = 0; k < params[i].size(); ++k) {
            p[k] = static_cast<T>(static_cast<double>(p[k]) - lr * static_cast<double>(g[k]));
        }
    }
}

std::string to_string(OptimizerKind kind) {
    return kind == OptimizerKind::adam ? "adam" : "sgd";
}

OptimizerKind optimizer_from_string(const std::string& name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "sgd") return OptimizerKind::sgd;
    throw ConfigError("unknown optimizer '" + name + "' (expected adam or sgd)");
}

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("train: lr must be > 0");
    if (iterations < 1) throw ConfigError("train: iterations must be >= 1");
    if (batch < 1) throw ConfigError("train: batch must be >= 1");
    if (loss_log_interval < 1) throw ConfigError("train: loss_log_interval must be >= 1");
}

std::string loss_trace_csv(std::span<const LossRow> rows) {
    std::string out = "iteration,loss\n";
    char buf[64];
    for (const LossRow& row : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g\n", row.iteration, row.loss);
        out += buf;
    }
    return out;
}

template <typename T>
std::vector<LossRow> train_loop(Network<T>& net, const PatchSet& data,
                                const TrainConfig& cfg) {
    cfg.validate();
    if (data.pairs.empty()) throw DataError("training dataset is empty");

    Rng rng(derive_seed(cfg.seed, 0x62617463680a0a0aull));  // batch-sampling stream
    const std::vector<std::span<T>> params = net.param_views();
    std::optional<AdamState<T>> adam;
    if (cfg.optimizer == OptimizerKind::adam) {
        adam.emplace(params, AdamConfig{.lr = cfg.lr});
    }

    std::vector<LossRow> rows;
    std::vector<std::size_t> indices(cfg.batch);
    for (int it = 1; it <= cfg.iterations; ++it) {
        for (std::size_t& idx : indices) idx = rng.uniform_index(data.pairs.size());
        auto [x, y] = patch_batch<T>(data, indices);
        ForwardTrace<T> trace = net.forward_trace(x);
        auto [loss, grad_pred] = mse_loss(trace.output, y);
        NetGrads<T> grads = net.backward(x, trace, grad_pred);
        const std::vector<std::span<const T>> grad_views = grads.views();
        if (adam) {
            adam->step(params, grad_views);
        } else {
            sgd_step<T>(params, grad_views, cfg.lr);
        }
        if (it % cfg.loss_log_interval == 0 || it == cfg.iterations) {
            rows.push_back({it, loss});
        }
    }
    return rows;
}

template std::pair<double, Tensor4<float>> mse_loss<float>(const Tensor4<float>&,
                                                           const Tensor4<float>&);
template std::pair<double, Tensor4<double>> mse_loss<double>(const Tensor4<double>&,
                                                             const Tensor4<double>&);
template class AdamState<float>;
template class AdamState<double>;
template void sgd_step<float>(std::span<const std::span<float>>,
                              std::span<const std::span<const float>>, double);
template void sgd_step<double>(std::span<const std::span<double>>,
                               std::span<const std::span<const double>>, double);
template std::vector<LossRow> train_loop<float>(Network<float>&, const PatchSet&,
                                                const TrainConfig&);
template std::vector<LossRow> train_loop<double>(Network<double>&, const PatchSet&,
                                                 const TrainConfig&);

}  // namespace rednet
