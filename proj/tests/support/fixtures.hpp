#pragma once

// Test-only fixtures: a seeded synthetic image dataset and a small trainer
// that produces the classifier used by the masking experiment.

#include "maxinv/eval.hpp"
#include "maxinv/model.hpp"

#include <cstdint>
#include <vector>

namespace maxinv::testing {

// 2-D identity model, the hand-checkable explanation fixture.
ModelD identity_model_2d();
// Zero weights, bias (1, 0): constant logits.
ModelD constant_model(Index d);

/// 16x16x1 images in three classes: a bright horizontal bar, a bright
/// vertical bar, or a bright square, on a uniform noisy gray background.
Dataset pattern_dataset(std::size_t count, std::uint64_t seed);

struct TrainConfig {
    int hidden = 64;
    int epochs = 20;
    int batch = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 7;
};

/// 2-hidden-layer relu MLP trained with Adam on softmax cross-entropy.
ModelD train_mlp(const Dataset& train, int num_classes, const TrainConfig& cfg);

double accuracy(const ModelD& model, const Dataset& data);

}  // namespace maxinv::testing
