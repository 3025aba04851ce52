#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "grucap/tensor.hpp"

namespace grucap {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double grad_clip = 0.0;  // global-norm threshold; 0 disables clipping
};

/// Adam with bias correction over a fixed list of parameter tensors.
/// step() consumes the accumulated gradients and zeroes them afterward.
/// Moment buffers and the step counter round-trip through checkpoints.
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<std::pair<std::string, Tensor>> params, AdamConfig cfg);

    /// grad_scale multiplies every gradient before the update (batch mean).
    void step(double grad_scale = 1.0);

    std::uint64_t step_count() const { return step_count_; }
    const AdamConfig& config() const { return cfg_; }

    /// Moment buffers as named blocks ("adam.m.<name>", "adam.v.<name>",
    /// "adam.t") for checkpointing.
    std::vector<std::pair<std::string, std::vector<double>>> state_blocks() const;
    void restore_state(const std::vector<std::pair<std::string, std::vector<double>>>& blocks);

private:
    std::vector<std::pair<std::string, Tensor>> params_;
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::uint64_t step_count_ = 0;
};

}  // namespace grucap
