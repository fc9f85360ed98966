#include "maxinv/io.hpp"

#include "maxinv/error.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace maxinv::io {

namespace {

Vec vec_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw InputError(what + " must be a JSON array");
    Vec v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw InputError(what + " must contain only numbers");
        v[static_cast<Index>(i)] = j[i].get<double>();
    }
    return v;
}

json vec_to_json(const Vec& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

double bound_from_json(const json& j, double missing) {
    if (j.is_null()) return missing;
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf" || s == "infinity") return std::numeric_limits<double>::infinity();
        if (s == "-inf" || s == "-infinity") return -std::numeric_limits<double>::infinity();
    }
    throw InputError("bounds must be numbers, null, or \"inf\"/\"-inf\"");
}

json bound_to_json(double b) {
    if (std::isinf(b)) return b > 0 ? "inf" : "-inf";
    return b;
}

std::vector<double> parse_csv_line(const std::string& line) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(cell, &used);
        } catch (const std::exception&) {
            throw InputError("CSV cell '" + cell + "' is not a number");
        }
        for (std::size_t k = used; k < cell.size(); ++k) {
            if (!std::isspace(static_cast<unsigned char>(cell[k]))) throw InputError("CSV cell '" + cell + "' is not a number");
        }
        out.push_back(value);
    }
    return out;
}

std::vector<Vec> read_csv_rows(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<Vec> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto cells = parse_csv_line(line);
        rows.push_back(Eigen::Map<const Vec>(cells.data(), static_cast<Index>(cells.size())));
    }
    return rows;
}

bool is_csv(const std::filesystem::path& path) { return path.extension() == ".csv"; }

}  // namespace

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const std::filesystem::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw InputError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Shape shape_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw InputError("shape must be [H, W, C]");
    Shape s{j[0].get<Index>(), j[1].get<Index>(), j[2].get<Index>()};
    if (s.height <= 0 || s.width <= 0 || s.channels <= 0) throw InputError("shape entries must be positive");
    return s;
}

json shape_to_json(const Shape& shape) { return json::array({shape.height, shape.width, shape.channels}); }

ModelD model_from_json(const json& j, OutputKind output) {
    try {
        if (!j.is_object() || !j.contains("layers")) throw InputError("model JSON needs \"layers\"");
        std::vector<DenseLayer<double>> layers;
        for (const auto& lj : j.at("layers")) {
            const auto& wj = lj.at("weights");
            if (!wj.is_array() || wj.empty()) throw InputError("layer weights must be a nonempty matrix");
            const std::size_t cols = wj[0].size();
            Mat w(static_cast<Index>(wj.size()), static_cast<Index>(cols));
            for (std::size_t r = 0; r < wj.size(); ++r) {
                if (wj[r].size() != cols) throw InputError("layer weights are ragged");
                w.row(static_cast<Index>(r)) = vec_from_json(wj[r], "weights row").transpose();
            }
            Vec b = lj.contains("bias") ? vec_from_json(lj.at("bias"), "bias") : Vec::Zero(w.rows());
            const Activation act = parse_activation(lj.value("activation", std::string("identity")));
            layers.push_back({std::move(w), std::move(b), act});
        }
        if (layers.empty()) throw InputError("model has no layers");
        const Index d = j.contains("input_dim") ? j.at("input_dim").get<Index>() : layers.front().in_dim();
        return ModelD(d, std::move(layers), output);
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed model JSON: ") + e.what());
    }
}

json model_to_json(const ModelD& model) {
    json layers = json::array();
    for (const auto& layer : model.layers()) {
        json w = json::array();
        for (Index r = 0; r < layer.weights.rows(); ++r) w.push_back(vec_to_json(layer.weights.row(r).transpose()));
        layers.push_back({{"weights", w}, {"bias", vec_to_json(layer.bias)}, {"activation", to_string(layer.activation)}});
    }
    return {{"input_dim", model.input_dim()}, {"layers", layers}};
}

ModelD load_model(const std::filesystem::path& path, OutputKind output) {
    return model_from_json(read_json(path), output);
}

InputRecord input_from_json(const json& j) {
    try {
        if (j.is_array()) return {vec_from_json(j, "input"), std::nullopt};
        if (j.is_object() && j.contains("values")) {
            InputRecord rec{vec_from_json(j.at("values"), "input values"), std::nullopt};
            if (j.contains("shape") && !j.at("shape").is_null()) rec.shape = shape_from_json(j.at("shape"));
            return rec;
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed input JSON: ") + e.what());
    }
    throw InputError("input JSON must be an array or an object with \"values\"");
}

InputRecord load_input(const std::filesystem::path& path) {
    if (is_csv(path)) {
        auto rows = read_csv_rows(path);
        if (rows.empty()) throw InputError("input CSV is empty");
        return {rows.front(), std::nullopt};
    }
    return input_from_json(read_json(path));
}

Dataset dataset_from_json(const json& j) {
    try {
        if (!j.is_object() || !j.contains("inputs")) throw InputError("dataset JSON needs \"inputs\"");
        Dataset ds;
        for (const auto& row : j.at("inputs")) ds.inputs.push_back(vec_from_json(row, "dataset input"));
        if (ds.inputs.empty()) throw InputError("dataset is empty");
        ds.shape = j.contains("shape") && !j.at("shape").is_null() ? shape_from_json(j.at("shape"))
                                                                    : flat_shape(ds.inputs.front().size());
        if (j.contains("labels") && !j.at("labels").is_null()) ds.labels = j.at("labels").get<std::vector<int>>();
        ds.validate();
        return ds;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed dataset JSON: ") + e.what());
    }
}

json dataset_to_json(const Dataset& dataset) {
    json inputs = json::array();
    for (const auto& x : dataset.inputs) inputs.push_back(vec_to_json(x));
    json out = {{"shape", shape_to_json(dataset.shape)}, {"inputs", inputs}};
    if (dataset.labels) out["labels"] = *dataset.labels;
    return out;
}

Dataset load_dataset(const std::filesystem::path& path) {
    if (is_csv(path)) {
        Dataset ds;
        ds.inputs = read_csv_rows(path);
        if (ds.inputs.empty()) throw InputError("dataset is empty");
        ds.shape = flat_shape(ds.inputs.front().size());
        ds.validate();
        return ds;
    }
    return dataset_from_json(read_json(path));
}

LinearProgram<double> lp_from_json(const json& j) {
    try {
        if (!j.is_object() || !j.contains("objective")) throw InputError("LP JSON needs \"objective\"");
        const Vec c = vec_from_json(j.at("objective"), "objective");
        LinearProgram<double> lp(c.size());
        lp.objective = c;
        const auto read_bounds = [&](const char* key, Vec& target, double missing) {
            if (!j.contains(key)) return;
            const auto& b = j.at(key);
            if (!b.is_array() || static_cast<Index>(b.size()) != c.size()) {
                throw InputError(std::string(key) + " must have one entry per variable");
            }
            for (std::size_t i = 0; i < b.size(); ++i) target[static_cast<Index>(i)] = bound_from_json(b[i], missing);
        };
        read_bounds("var_lower", lp.lower, -std::numeric_limits<double>::infinity());
        read_bounds("var_upper", lp.upper, std::numeric_limits<double>::infinity());
        if (j.contains("rows")) {
            for (const auto& row : j.at("rows")) {
                const json& a = row.contains("coefficients") ? row.at("coefficients") : row.at("a");
                const double b = row.contains("rhs") ? row.at("rhs").get<double>() : row.at("b").get<double>();
                lp.add_row(vec_from_json(a, "row coefficients"), b);
            }
        }
        lp.validate();
        return lp;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed LP JSON: ") + e.what());
    }
}

json lp_to_json(const LinearProgram<double>& lp) {
    json lower = json::array(), upper = json::array(), rows = json::array();
    for (Index i = 0; i < lp.num_vars(); ++i) {
        lower.push_back(bound_to_json(lp.lower[i]));
        upper.push_back(bound_to_json(lp.upper[i]));
    }
    for (Index r = 0; r < lp.num_rows(); ++r) {
        rows.push_back({{"coefficients", vec_to_json(lp.rows.row(r).transpose())}, {"rhs", lp.rhs[r]}});
    }
    return {{"objective", vec_to_json(lp.objective)}, {"var_lower", lower}, {"var_upper", upper}, {"rows", rows}};
}

json solution_to_json(const LPSolution<double>& solution) {
    json out = {{"status", std::string(to_string(solution.status))},
                {"iterations", solution.iterations}};
    if (solution.status == LPStatus::Optimal) {
        out["values"] = vec_to_json(solution.values);
        out["objective_value"] = solution.objective_value;
    } else {
        out["values"] = nullptr;
        out["objective_value"] = nullptr;
    }
    return out;
}

json score_map_to_json(const Explanation& e) {
    return {{"method", "maxinv"},
            {"shape", shape_to_json(e.scores.shape)},
            {"per_feature", vec_to_json(e.scores.per_feature)},
            {"per_group", vec_to_json(e.scores.per_group)},
            {"delta", e.scores.delta},
            {"predicted_class", e.predicted_class},
            {"u", vec_to_json(e.box.u)},
            {"v", vec_to_json(e.box.v)},
            {"w", e.box.w},
            {"objective", e.box.objective}};
}

json attribution_to_json(const AttributionMap& map) {
    return {{"method", map.method},
            {"shape", shape_to_json(map.shape)},
            {"per_feature", vec_to_json(map.per_feature)},
            {"per_group", vec_to_json(map.per_feature)},
            {"delta", nullptr}};
}

void write_scores_csv(std::ostream& out, const Vec& per_feature) {
    out << "feature,score\n";
    for (Index i = 0; i < per_feature.size(); ++i) {
        out << i << ',' << json(per_feature[i]).dump() << '\n';
    }
}

std::vector<Vec> load_score_file(const std::filesystem::path& path) {
    const json j = read_json(path);
    if (!j.is_object() || !j.contains("scores")) throw InputError("score file needs \"scores\"");
    std::vector<Vec> out;
    for (const auto& row : j.at("scores")) out.push_back(vec_from_json(row, "score vector"));
    return out;
}

}  // namespace maxinv::io
