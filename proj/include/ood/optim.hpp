#pragma once

#include <cmath>
#include <vector>

#include "ood/params.hpp"

namespace ood {

// Bias-corrected adaptive-moment optimizer.
template <typename T>
class Adam {
public:
    explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ParamStore<T>& ps) {
        if (m_.empty()) {
            for (const auto& e : ps.entries) {
                m_.emplace_back(e.value.shape);
                v_.emplace_back(e.value.shape);
            }
        }
        require(m_.size() == ps.entries.size(), "adam: param store changed shape");
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < ps.entries.size(); ++i) {
            auto& p = ps.entries[i].value;
            const auto& g = ps.entries[i].grad;
            auto& m = m_[i];
            auto& v = v_[i];
            for (std::size_t k = 0; k < p.numel(); ++k) {
                double gk = static_cast<double>(g.data[k]);
                m.data[k] = static_cast<T>(beta1_ * m.data[k] + (1.0 - beta1_) * gk);
                v.data[k] = static_cast<T>(beta2_ * v.data[k] + (1.0 - beta2_) * gk * gk);
                double mhat = m.data[k] / bc1;
                double vhat = v.data[k] / bc2;
                p.data[k] = static_cast<T>(p.data[k] - lr_ * mhat / (std::sqrt(vhat) + eps_));
            }
        }
    }

    double lr() const { return lr_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Tensor<T>> m_, v_;
};

}  // namespace ood
