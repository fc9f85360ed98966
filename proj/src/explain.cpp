#include "maxinv/explain.hpp"

#include "maxinv/error.hpp"
#include "maxinv/random.hpp"

#include <algorithm>
#include <random>
#include <string>

namespace maxinv {

namespace {

struct Linearisation {
    Vec logits;
    std::vector<Vec> gradients;
};

Linearisation linearise(const ModelD& model, const Vec& x) {
    Linearisation lin{model.forward(x), {}};
    lin.gradients.reserve(static_cast<std::size_t>(model.num_classes()));
    for (Index j = 0; j < model.num_classes(); ++j) lin.gradients.push_back(model.gradient(x, j));
    return lin;
}

void require_classes(const ModelD& model) {
    if (model.num_classes() < 2) throw InputError("nothing to constrain: model has fewer than two classes");
}

}  // namespace

std::vector<LinearizedConstraint> build_base_constraints(const ModelD& model, const Vec& x) {
    require_classes(model);
    const Linearisation lin = linearise(model, x);
    const Index c = argmax(lin.logits);
    std::vector<LinearizedConstraint> out;
    out.reserve(static_cast<std::size_t>(model.num_classes() - 1));
    for (Index j = 0; j < model.num_classes(); ++j) {
        if (j == c) continue;
        out.push_back({lin.logits[c] - lin.logits[j], lin.gradients[j] - lin.gradients[c], j, std::nullopt});
    }
    return out;
}

std::vector<Vec> draw_noises(Index dim, const SmoothingConfig& cfg) {
    if (cfg.num_noises < 0) throw InputError("number of smoothing noises must be nonnegative");
    if (!(cfg.sigma >= 0.0)) throw InputError("smoothing sigma must be nonnegative");
    std::vector<Vec> noises;
    noises.reserve(static_cast<std::size_t>(cfg.num_noises));
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int k = 0; k < cfg.num_noises; ++k) {
        Vec n(dim);
        for (Index i = 0; i < dim; ++i) n[i] = cfg.sigma * normal(rng);
        noises.push_back(std::move(n));
    }
    return noises;
}

std::vector<LinearizedConstraint> build_constraints_at(const ModelD& model, const Vec& x,
                                                       const std::vector<Vec>& noises, SmoothingForm form) {
    require_classes(model);
    if (noises.empty()) return {};
    const Linearisation base = linearise(model, x);
    const Index c = argmax(base.logits);

    std::vector<LinearizedConstraint> out;
    out.reserve(noises.size() * static_cast<std::size_t>(model.num_classes() - 1));
    for (std::size_t k = 0; k < noises.size(); ++k) {
        const Vec& n = noises[k];
        if (n.size() != x.size()) throw InputError("noise dimension does not match input");
        const Linearisation lin = linearise(model, x + n);
        for (Index j = 0; j < model.num_classes(); ++j) {
            if (j == c) continue;
            Vec h = lin.gradients[j] - lin.gradients[c];
            const double shift = form == SmoothingForm::Rederived
                                     ? h.dot(n)
                                     : (base.gradients[j] - base.gradients[c]).dot(n);
            out.push_back({lin.logits[c] - lin.logits[j] + shift, std::move(h), j, static_cast<int>(k)});
        }
    }
    return out;
}

std::vector<LinearizedConstraint> build_smoothed_constraints(const ModelD& model, const Vec& x,
                                                             const SmoothingConfig& cfg) {
    return build_constraints_at(model, x, draw_noises(x.size(), cfg), cfg.form);
}

GroupCoefficients aggregate_by_partition(const LinearizedConstraint& c, const FeaturePartition& p) {
    if (c.h.size() != p.dim()) {
        throw InputError("constraint has " + std::to_string(c.h.size()) + " features, partition covers " +
                         std::to_string(p.dim()));
    }
    GroupCoefficients out{Vec::Zero(p.num_groups()), Vec::Zero(p.num_groups())};
    for (Index m = 0; m < p.num_groups(); ++m) {
        for (Index i : p.group(m)) {
            const double hi = c.h[i];
            if (hi >= 0.0) out.positive[m] += hi;
            else out.negative[m] += hi;
        }
    }
    return out;
}

LinearProgram<double> assemble_lp(const PerturbationProblem& problem) {
    if (!(problem.delta > 0.0)) throw InputError("delta must be positive");
    if (!(problem.lambda >= 0.0)) throw InputError("lambda must be nonnegative");
    const Index groups = problem.partition.num_groups();
    const Index vars = 2 * groups + (problem.soft ? 1 : 0);

    LinearProgram<double> lp(vars);
    lp.objective.head(2 * groups).setOnes();
    lp.upper.head(2 * groups).setConstant(problem.delta);
    if (problem.soft) lp.objective[2 * groups] = -problem.lambda;

    lp.rows = Mat::Zero(static_cast<Index>(problem.constraints.size()), vars);
    lp.rhs = Vec(static_cast<Index>(problem.constraints.size()));
    for (std::size_t r = 0; r < problem.constraints.size(); ++r) {
        const auto& c = problem.constraints[r];
        const GroupCoefficients agg = aggregate_by_partition(c, problem.partition);
        const Index row = static_cast<Index>(r);
        lp.rows.row(row).head(groups) = -agg.negative.transpose();
        lp.rows.row(row).segment(groups, groups) = agg.positive.transpose();
        if (problem.soft) lp.rows(row, 2 * groups) = -1.0;
        lp.rhs[row] = c.g;
    }
    return lp;
}

PerturbationBox box_from_solution(const PerturbationProblem& problem, const LPSolution<double>& solution) {
    const Index groups = problem.partition.num_groups();
    PerturbationBox box;
    box.u = solution.values.head(groups).cwiseMax(0.0).cwiseMin(problem.delta);
    box.v = solution.values.segment(groups, groups).cwiseMax(0.0).cwiseMin(problem.delta);
    box.w = problem.soft ? std::max(0.0, solution.values[2 * groups]) : 0.0;
    box.objective = solution.objective_value;
    return box;
}

ScoreMap score_map(const PerturbationBox& box, const FeaturePartition& partition, double delta, const Shape& shape) {
    ScoreMap s;
    s.per_group = ((2.0 * delta - box.u.array() - box.v.array()).max(0.0).min(2.0 * delta)).matrix();
    s.per_feature = partition.broadcast(s.per_group);
    s.shape = shape;
    s.delta = delta;
    return s;
}

double worst_case_gain(const Vec& h, const Vec& u_feature, const Vec& v_feature) {
    return (h.array() >= 0.0).select(h.array() * v_feature.array(), -h.array() * u_feature.array()).sum();
}

Explanation explain(const ModelD& model, const Vec& x, const FeaturePartition& partition,
                    const ExplainOptions& options, const Shape& shape) {
    if (x.size() != model.input_dim()) throw InputError("input dimension does not match model");
    if (partition.dim() != x.size()) throw InputError("partition dimension does not match input");
    if (shape.size() != x.size()) throw InputError("shape does not match input dimension");

    PerturbationProblem problem{build_base_constraints(model, x), partition, options.delta,
                                options.lambda.value_or(default_lambda(partition.num_groups())), options.soft};
    if (options.smoothing.num_noises > 0) {
        auto extra = build_smoothed_constraints(model, x, options.smoothing);
        problem.constraints.insert(problem.constraints.end(), std::make_move_iterator(extra.begin()),
                                   std::make_move_iterator(extra.end()));
    }

    const LinearProgram<double> lp = assemble_lp(problem);
    const LPSolution<double> sol = solve(lp);
    if (sol.status == LPStatus::Infeasible) {
        throw InfeasibleError(
            "invariant-box LP is infeasible: a smoothing noise flipped the linearised prediction; "
            "rerun with soft constraints (--soft)");
    }
    if (sol.status != LPStatus::Optimal) throw std::runtime_error("invariant-box LP is unbounded");

    Explanation out;
    out.box = box_from_solution(problem, sol);
    out.scores = score_map(out.box, partition, options.delta, shape);
    out.predicted_class = predict_class(model, x);
    out.lp_rows = static_cast<int>(lp.num_rows());
    return out;
}

}  // namespace maxinv
