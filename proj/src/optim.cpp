#include "grucap/optim.hpp"

#include <cmath>

#include "grucap/errors.hpp"

namespace grucap {

AdamOptimizer::AdamOptimizer(std::vector<std::pair<std::string, Tensor>> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (auto& [name, p] : params_) {
        if (!p.requires_grad()) {
            throw ContractError("AdamOptimizer: parameter '" + name + "' has no gradient buffer");
        }
        m_.emplace_back(p.numel(), 0.0);
        v_.emplace_back(p.numel(), 0.0);
    }
}

void AdamOptimizer::step(double grad_scale) {
    ++step_count_;
    const double t = static_cast<double>(step_count_);
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t);

    double clip_scale = 1.0;
    if (cfg_.grad_clip > 0.0) {
        double sq = 0.0;
        for (std::size_t k = 0; k < params_.size(); ++k) {
            for (double g : params_[k].second.grad()) {
                const double gs = g * grad_scale;
                sq += gs * gs;
            }
        }
        const double norm = std::sqrt(sq);
        if (norm > cfg_.grad_clip) {
            clip_scale = cfg_.grad_clip / norm;
        }
    }

    for (std::size_t k = 0; k < params_.size(); ++k) {
        Tensor& p = params_[k].second;
        std::vector<double>& grad = p.grad();
        std::vector<double>& data = p.data();
        std::vector<double>& m = m_[k];
        std::vector<double>& v = v_[k];
        for (std::size_t i = 0; i < grad.size(); ++i) {
            const double g = grad[i] * grad_scale * clip_scale;
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            data[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
            grad[i] = 0.0;
        }
    }
}

std::vector<std::pair<std::string, std::vector<double>>> AdamOptimizer::state_blocks() const {
    std::vector<std::pair<std::string, std::vector<double>>> blocks;
    blocks.reserve(2 * params_.size() + 1);
    for (std::size_t k = 0; k < params_.size(); ++k) {
        blocks.emplace_back("adam.m." + params_[k].first, m_[k]);
        blocks.emplace_back("adam.v." + params_[k].first, v_[k]);
    }
    blocks.emplace_back("adam.t", std::vector<double>{static_cast<double>(step_count_)});
    return blocks;
}

void AdamOptimizer::restore_state(
    const std::vector<std::pair<std::string, std::vector<double>>>& blocks) {
    for (const auto& [name, values] : blocks) {
        if (name == "adam.t") {
            if (values.size() != 1) {
                throw DataError("adam.t block must hold exactly one value");
            }
            step_count_ = static_cast<std::uint64_t>(values[0]);
            continue;
        }
        bool found = false;
        for (std::size_t k = 0; k < params_.size(); ++k) {
            const std::string m_name = "adam.m." + params_[k].first;
            const std::string v_name = "adam.v." + params_[k].first;
            if (name == m_name || name == v_name) {
                std::vector<double>& dst = (name == m_name) ? m_[k] : v_[k];
                if (values.size() != dst.size()) {
                    throw DataError("optimizer block '" + name + "' has wrong length");
                }
                dst = values;
                found = true;
                break;
            }
        }
        if (!found) {
            throw DataError("optimizer block '" + name + "' matches no parameter");
        }
    }
}

}  // namespace grucap
