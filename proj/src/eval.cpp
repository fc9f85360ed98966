#include "maxinv/eval.hpp"

#include "maxinv/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <thread>

namespace maxinv {

void Dataset::validate() const {
    if (inputs.empty()) throw InputError("dataset is empty");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].size() != dim()) {
            throw InputError("dataset input " + std::to_string(i) + " has " + std::to_string(inputs[i].size()) +
                             " features, expected " + std::to_string(dim()));
        }
        if (!inputs[i].allFinite()) throw InputError("dataset input " + std::to_string(i) + " is not finite");
    }
    if (labels && labels->size() != inputs.size()) throw InputError("label count does not match input count");
}

void MaskSpec::validate() const {
    if (tau_grid.empty()) throw InputError("tau grid is empty");
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        if (!(tau_grid[i] >= 0.0 && tau_grid[i] <= 100.0)) throw InputError("tau values must lie in [0, 100]");
        if (i > 0 && tau_grid[i] < tau_grid[i - 1]) throw InputError("tau grid must be sorted");
    }
    if (!std::isfinite(mask_value)) throw InputError("mask value must be finite");
}

double percentile(const Vec& values, double tau) {
    if (values.size() == 0) throw InputError("percentile of an empty vector");
    if (!(tau >= 0.0 && tau <= 100.0)) throw InputError("tau must lie in [0, 100]");
    std::vector<double> sorted(values.data(), values.data() + values.size());
    std::sort(sorted.begin(), sorted.end());
    const double pos = tau / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Vec mask_input(const Vec& x, const Vec& scores, double tau, double mask_value) {
    if (scores.size() != x.size()) throw InputError("score map dimension does not match input");
    const double threshold = percentile(scores, tau);
    Vec out = x;
    for (Index i = 0; i < x.size(); ++i) {
        if (scores[i] < threshold) out[i] = mask_value;
    }
    return out;
}

namespace {

// Runs body(i) for i in [0, n) across `jobs` threads. The first exception
// (lowest index) is rethrown after all workers finish.
template <typename Body>
void parallel_for(std::size_t n, int jobs, Body body) {
    const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::size_t error_index = n;
    std::exception_ptr error;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (i < error_index) {
                        error_index = i;
                        error = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

EvalCurve change_ratio_curve(const ModelD& model, const Dataset& dataset, const NamedMethod& method,
                             const MaskSpec& spec, int jobs) {
    return compare_methods(model, dataset, {method}, spec, jobs).front();
}

std::vector<EvalCurve> compare_methods(const ModelD& model, const Dataset& dataset,
                                       const std::vector<NamedMethod>& methods, const MaskSpec& spec, int jobs) {
    if (methods.empty()) throw InputError("no methods to compare");
    dataset.validate();
    spec.validate();
    if (dataset.dim() != model.input_dim()) throw InputError("dataset dimension does not match model");

    const std::size_t n = dataset.inputs.size();
    const std::size_t taus = spec.tau_grid.size();
    std::vector<EvalCurve> curves;
    for (const auto& method : methods) {
        // changed[i * taus + t] is 1 when input i flips class at tau t.
        std::vector<unsigned char> changed(n * taus, 0);
        parallel_for(n, jobs, [&](std::size_t i) {
            const Vec& x = dataset.inputs[i];
            const AttributionMap scores = method.provider(x, i);
            if (scores.per_feature.size() != x.size()) {
                throw InputError("method '" + method.name + "' returned a score map of the wrong size for input " +
                                 std::to_string(i));
            }
            const Index original = predict_class(model, x);
            for (std::size_t t = 0; t < taus; ++t) {
                const Vec masked = mask_input(x, scores.per_feature, spec.tau_grid[t], spec.mask_value);
                changed[i * taus + t] = predict_class(model, masked) != original ? 1 : 0;
            }
        });

        EvalCurve curve{method.name, spec.tau_grid, std::vector<double>(taus, 0.0)};
        for (std::size_t t = 0; t < taus; ++t) {
            std::size_t count = 0;
            for (std::size_t i = 0; i < n; ++i) count += changed[i * taus + t];
            curve.change_ratios[t] = static_cast<double>(count) / static_cast<double>(n);
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

void write_curves_csv(std::ostream& out, const std::vector<EvalCurve>& curves) {
    out << "method,tau,change_ratio\n";
    for (const auto& c : curves) {
        for (std::size_t t = 0; t < c.taus.size(); ++t) {
            out << c.method << ',' << std::setprecision(10) << c.taus[t] << ',' << std::setprecision(17)
                << c.change_ratios[t] << '\n';
        }
    }
}

}  // namespace maxinv
