#pragma once

#include "maxinv/baselines.hpp"
#include "maxinv/model.hpp"
#include "maxinv/types.hpp"

#include <functional>
#include <ostream>
#include <optional>
#include <string>
#include <vector>

namespace maxinv {

struct Dataset {
    std::vector<Vec> inputs;
    Shape shape;
    std::optional<std::vector<int>> labels;

    Index dim() const { return shape.size(); }
    void validate() const;
};

struct MaskSpec {
    double mask_value = 0.5;
    std::vector<double> tau_grid{0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};

    void validate() const;
};

struct EvalCurve {
    std::string method;
    std::vector<double> taus;
    std::vector<double> change_ratios;
};

/// Scores for dataset input `index`. Must be safe to call concurrently.
using ScoreProvider = std::function<AttributionMap(const Vec& x, std::size_t index)>;

struct NamedMethod {
    std::string name;
    ScoreProvider provider;
};

/// Empirical percentile with linear interpolation between order statistics.
double percentile(const Vec& values, double tau);

/// Sets features scoring strictly below the tau-percentile to mask_value.
Vec mask_input(const Vec& x, const Vec& scores, double tau, double mask_value);

/// Fraction of inputs whose prediction changes after masking, per tau.
/// Work is spread over `jobs` threads; the result does not depend on it.
EvalCurve change_ratio_curve(const ModelD& model, const Dataset& dataset, const NamedMethod& method,
                             const MaskSpec& spec, int jobs = 1);

std::vector<EvalCurve> compare_methods(const ModelD& model, const Dataset& dataset,
                                       const std::vector<NamedMethod>& methods, const MaskSpec& spec,
                                       int jobs = 1);

/// Long-format CSV: header `method,tau,change_ratio`, one line per point.
void write_curves_csv(std::ostream& out, const std::vector<EvalCurve>& curves);

}  // namespace maxinv
