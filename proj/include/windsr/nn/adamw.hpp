#pragma once

#include <cmath>
#include <vector>

#include "windsr/nn/layers.hpp"

namespace windsr::nn {

// AdamW with decoupled weight decay. Learning rate and decay are passed per
// step so the per-epoch linear schedules stay outside the optimizer.
template <typename T>
class AdamW {
public:
    explicit AdamW(std::vector<Param<T>*> params, double beta1 = 0.9, double beta2 = 0.999,
                   double eps = 1e-8)
        : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (size_t p = 0; p < params_.size(); ++p) {
            m_[p].assign(params_[p]->size(), T(0));
            v_[p].assign(params_[p]->size(), T(0));
        }
    }

    void zero_grad() {
        for (auto* p : params_) std::fill(p->grad.begin(), p->grad.end(), T(0));
    }

    void step(double lr, double weight_decay) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (size_t p = 0; p < params_.size(); ++p) {
            Param<T>& prm = *params_[p];
            for (size_t i = 0; i < prm.size(); ++i) {
                double g = static_cast<double>(prm.grad[i]);
                double m = beta1_ * static_cast<double>(m_[p][i]) + (1.0 - beta1_) * g;
                double v = beta2_ * static_cast<double>(v_[p][i]) + (1.0 - beta2_) * g * g;
                m_[p][i] = static_cast<T>(m);
                v_[p][i] = static_cast<T>(v);
                double update = (m / bc1) / (std::sqrt(v / bc2) + eps_) +
                                weight_decay * static_cast<double>(prm.value[i]);
                prm.value[i] = static_cast<T>(static_cast<double>(prm.value[i]) - lr * update);
            }
        }
    }

private:
    std::vector<Param<T>*> params_;
    std::vector<std::vector<T>> m_, v_;
    double beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
};

} // namespace windsr::nn
