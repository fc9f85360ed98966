#include "maxinv/baselines.hpp"

#include "maxinv/error.hpp"

#include <algorithm>
#include <random>

namespace maxinv {

namespace {

void check(const ModelD& model, const Vec& x, const Shape& shape) {
    if (x.size() != model.input_dim()) throw InputError("input dimension does not match model");
    if (shape.size() != x.size()) throw InputError("shape does not match input dimension");
}

}  // namespace

AttributionMap gradient_saliency(const ModelD& model, const Vec& x, const Shape& shape) {
    check(model, x, shape);
    const Index c = predict_class(model, x);
    return {model.gradient(x, c).cwiseAbs(), "gradient", shape};
}

AttributionMap smoothgrad(const ModelD& model, const Vec& x, int num_noises, double sigma, std::uint64_t seed,
                          const Shape& shape) {
    check(model, x, shape);
    if (num_noises < 1) throw InputError("smoothgrad needs at least one noise sample");
    if (!(sigma >= 0.0)) throw InputError("smoothgrad sigma must be nonnegative");
    const Index c = predict_class(model, x);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec total = Vec::Zero(x.size());
    Vec noisy(x.size());
    for (int k = 0; k < num_noises; ++k) {
        for (Index i = 0; i < x.size(); ++i) noisy[i] = x[i] + sigma * normal(rng);
        total += model.gradient(noisy, c).cwiseAbs();
    }
    return {total / static_cast<double>(num_noises), "smoothgrad", shape};
}

IntegratedGradients integrated_gradients(const ModelD& model, const Vec& x, const Vec& baseline, int steps,
                                         const Shape& shape) {
    check(model, x, shape);
    if (steps < 1) throw InputError("integrated gradients needs at least one step");
    if (baseline.size() != x.size()) throw InputError("baseline dimension does not match input");
    const Index c = predict_class(model, x);
    const Vec path = x - baseline;
    Vec mean = Vec::Zero(x.size());
    for (int k = 0; k < steps; ++k) {
        const double alpha = (k + 0.5) / steps;
        mean += model.gradient(baseline + alpha * path, c);
    }
    mean /= static_cast<double>(steps);

    IntegratedGradients out;
    out.map = {path.cwiseProduct(mean), "intgrad", shape};
    out.completeness_error =
        std::abs(out.map.per_feature.sum() - (model.forward(x)[c] - model.forward(baseline)[c]));
    return out;
}

AttributionMap occlusion(const ModelD& model, const Vec& x, const Shape& shape, const Shape& mask,
                         double mask_value) {
    check(model, x, shape);
    if (mask.height <= 0 || mask.width <= 0 || mask.channels <= 0 || mask.height > shape.height ||
        mask.width > shape.width || mask.channels > shape.channels) {
        throw InputError("occlusion mask shape does not fit the input shape");
    }
    const Index c = predict_class(model, x);
    const double reference = model.forward(x)[c];
    Vec scores(x.size());
    Vec masked = x;
    std::vector<Index> tile;
    for (Index ty = 0; ty < shape.height; ty += mask.height) {
        for (Index tx = 0; tx < shape.width; tx += mask.width) {
            for (Index tc = 0; tc < shape.channels; tc += mask.channels) {
                tile.clear();
                for (Index y = ty; y < std::min(ty + mask.height, shape.height); ++y)
                    for (Index xx = tx; xx < std::min(tx + mask.width, shape.width); ++xx)
                        for (Index ch = tc; ch < std::min(tc + mask.channels, shape.channels); ++ch)
                            tile.push_back(shape.offset(y, xx, ch));
                for (Index i : tile) masked[i] = mask_value;
                const double drop = reference - model.forward(masked)[c];
                for (Index i : tile) {
                    scores[i] = drop;
                    masked[i] = x[i];
                }
            }
        }
    }
    return {scores, "occlusion", shape};
}

AttributionMap random_scores(Index dim, std::uint64_t seed, const Shape& shape) {
    if (shape.size() != dim) throw InputError("shape does not match input dimension");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Vec s(dim);
    for (Index i = 0; i < dim; ++i) s[i] = uniform(rng);
    return {s, "random", shape};
}

}  // namespace maxinv
