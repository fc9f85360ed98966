#pragma once

#include "maxinv/lp.hpp"
#include "maxinv/model.hpp"
#include "maxinv/partition.hpp"
#include "maxinv/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace maxinv {

/// One linearised "class c stays ahead of class j" condition, g >= h . r,
/// where r is the perturbation of the input.
struct LinearizedConstraint {
    double g = 0.0;  // f_c - f_j at the expansion point (plus the anchor shift for noisy rows)
    Vec h;           // grad f_j - grad f_c at the expansion point
    Index source_class = 0;
    std::optional<int> noise_tag;  // which smoothing noise produced the row
};

// How a noisy expansion point x + n shifts the right-hand side.
enum class SmoothingForm {
    Rederived,  // g^n + h^n . n  (gradient taken at x + n)
    Literal,    // g^n + h . n    (gradient taken at x)
};

struct SmoothingConfig {
    int num_noises = 0;
    double sigma = 0.05;
    std::uint64_t seed = 0;
    SmoothingForm form = SmoothingForm::Rederived;
};

struct PerturbationProblem {
    std::vector<LinearizedConstraint> constraints;
    FeaturePartition partition;
    double delta = 0.1;
    double lambda = 0.0;
    bool soft = false;
};

/// Per-group box R(u, v) = prod [-u_m, v_m] and the soft-mode slack w.
struct PerturbationBox {
    Vec u;
    Vec v;
    double w = 0.0;
    double objective = 0.0;
};

struct ScoreMap {
    Vec per_group;    // 2 delta - u_m - v_m
    Vec per_feature;  // each feature inherits its group's score
    Shape shape;
    double delta = 0.0;
};

struct GroupCoefficients {
    Vec positive;  // sum of h_i >= 0 within each group
    Vec negative;  // sum of h_i < 0 within each group
};

struct ExplainOptions {
    double delta = 0.1;
    std::optional<double> lambda;  // defaults to default_lambda(M)
    bool soft = true;
    SmoothingConfig smoothing;
};

struct Explanation {
    PerturbationBox box;
    ScoreMap scores;
    Index predicted_class = 0;
    int lp_rows = 0;
};

// 2 * M * 1e-4, the per-group scaling of the penalty used for 8x8 patches.
inline double default_lambda(Index num_groups) { return 2.0 * static_cast<double>(num_groups) * 1e-4; }

/// One constraint per class j != c, c = predict_class(model, x).
std::vector<LinearizedConstraint> build_base_constraints(const ModelD& model, const Vec& x);

/// Gaussian anchor shifts n_1..n_N drawn i.i.d. N(0, sigma^2) per coordinate.
std::vector<Vec> draw_noises(Index dim, const SmoothingConfig& cfg);

std::vector<LinearizedConstraint> build_smoothed_constraints(const ModelD& model, const Vec& x,
                                                             const SmoothingConfig& cfg);

/// Rows for explicitly given anchor shifts; the class compared against is
/// always the one predicted at the unshifted x.
std::vector<LinearizedConstraint> build_constraints_at(const ModelD& model, const Vec& x,
                                                       const std::vector<Vec>& noises,
                                                       SmoothingForm form = SmoothingForm::Rederived);

GroupCoefficients aggregate_by_partition(const LinearizedConstraint& c, const FeaturePartition& p);

/// Variables (u_1..u_M, v_1..v_M[, w]); one row per constraint:
///   sum_m (h+_m v_m - h-_m u_m) [- w] <= g.
LinearProgram<double> assemble_lp(const PerturbationProblem& problem);

PerturbationBox box_from_solution(const PerturbationProblem& problem, const LPSolution<double>& solution);

ScoreMap score_map(const PerturbationBox& box, const FeaturePartition& partition, double delta, const Shape& shape);

/// Worst-case value of h . r over the box, attained at the corner
/// r_i = v_i where h_i >= 0 and r_i = -u_i otherwise (per-feature u, v).
double worst_case_gain(const Vec& h, const Vec& u_feature, const Vec& v_feature);

/// Solves the maximal invariant box problem for model at x.
///
/// Throws InfeasibleError when hard mode meets smoothing rows that cannot
/// all hold (a noise flipped the linearised argmax).
Explanation explain(const ModelD& model, const Vec& x, const FeaturePartition& partition,
                    const ExplainOptions& options, const Shape& shape);

inline Explanation explain(const ModelD& model, const Vec& x, const FeaturePartition& partition,
                           const ExplainOptions& options) {
    return explain(model, x, partition, options, flat_shape(x.size()));
}

}  // namespace maxinv
