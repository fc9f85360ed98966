#pragma once

#include "maxinv/model.hpp"
#include "maxinv/types.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace maxinv {

// Per-feature relevance scores produced by any attribution method.
struct AttributionMap {
    Vec per_feature;
    std::string method;
    Shape shape;
};

AttributionMap gradient_saliency(const ModelD& model, const Vec& x, const Shape& shape);

AttributionMap smoothgrad(const ModelD& model, const Vec& x, int num_noises, double sigma, std::uint64_t seed,
                          const Shape& shape);

struct IntegratedGradients {
    AttributionMap map;
    double completeness_error = 0.0;  // |sum(attr) - (f_c(x) - f_c(x0))|
};

/// Midpoint Riemann sum of the path integral from baseline to x.
IntegratedGradients integrated_gradients(const ModelD& model, const Vec& x, const Vec& baseline, int steps,
                                         const Shape& shape);

/// Drop in f_c when each non-overlapping mask tile is set to mask_value;
/// every feature in a tile receives that tile's drop.
AttributionMap occlusion(const ModelD& model, const Vec& x, const Shape& shape, const Shape& mask,
                         double mask_value);

/// Uniform random scores; the reference a useful method must beat.
AttributionMap random_scores(Index dim, std::uint64_t seed, const Shape& shape);

}  // namespace maxinv
