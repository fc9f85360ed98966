#pragma once

#include "maxinv/baselines.hpp"
#include "maxinv/eval.hpp"
#include "maxinv/explain.hpp"
#include "maxinv/lp.hpp"
#include "maxinv/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace maxinv::io {

using json = nlohmann::json;

// {"input_dim": d, "layers": [{"weights": [[...]], "bias": [...], "activation": "relu"}, ...]}
ModelD model_from_json(const json& j, OutputKind output = OutputKind::Logits);
json model_to_json(const ModelD& model);
ModelD load_model(const std::filesystem::path& path, OutputKind output = OutputKind::Logits);

struct InputRecord {
    Vec values;
    std::optional<Shape> shape;
};

// A JSON array, a JSON object {"values": [...], "shape": [H, W, C]}, or a CSV row.
InputRecord input_from_json(const json& j);
InputRecord load_input(const std::filesystem::path& path);

// JSON {"shape": [...], "inputs": [[...], ...], "labels": [...]} or CSV with one input per line.
Dataset dataset_from_json(const json& j);
json dataset_to_json(const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);

Shape shape_from_json(const json& j);
json shape_to_json(const Shape& shape);

// {"objective": [...], "var_lower": [...], "var_upper": [...], "rows": [{"coefficients": [...], "rhs": b}]}
// Bounds may be null or "inf"/"-inf"; missing bounds default to [0, inf).
LinearProgram<double> lp_from_json(const json& j);
json lp_to_json(const LinearProgram<double>& lp);
json solution_to_json(const LPSolution<double>& solution);

json score_map_to_json(const Explanation& explanation);
json attribution_to_json(const AttributionMap& map);
void write_scores_csv(std::ostream& out, const Vec& per_feature);

// {"scores": [[...], ...]} with one score vector per dataset input.
std::vector<Vec> load_score_file(const std::filesystem::path& path);

json read_json(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames, so readers never see a
/// partially written file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace maxinv::io
