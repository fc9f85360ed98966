#include "fixtures.hpp"

#include "cli.hpp"
#include "maxinv/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

using namespace maxinv;
using namespace maxinv::testing;
namespace fs = std::filesystem;

namespace {

const fs::path data_dir = MAXINV_TEST_DATA;

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "maxinv");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("maxinv_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void write(const std::string& path, const std::string& text) { io::write_file_atomic(path, text); }

}  // namespace

TEST_CASE("solve-lp") {
    const auto ok = run({"solve-lp", (data_dir / "toy_lp.json").string()});
    CHECK(ok.code == 0);
    const auto j = io::json::parse(ok.out);
    CHECK(j["status"] == "optimal");
    CHECK(j["objective_value"].get<double>() == doctest::Approx(1.0));

    const auto bad = run({"solve-lp", (data_dir / "infeasible_lp.json").string()});
    CHECK(bad.code == 2);
    CHECK(io::json::parse(bad.out)["status"] == "infeasible");

    TempDir tmp;
    write(tmp / "box.json", R"({"objective": [1, 1, 1], "var_lower": [0, 0, 0], "var_upper": [0.1, 0.1, 0.1]})");
    const auto box = run({"solve-lp", tmp / "box.json"});
    CHECK(io::json::parse(box.out)["objective_value"].get<double>() == doctest::Approx(0.3));

    write(tmp / "broken.json", "{not json");
    CHECK(run({"solve-lp", tmp / "broken.json"}).code == 1);
    CHECK(run({"solve-lp", tmp / "missing.json"}).code == 1);
}

TEST_CASE("explain writes JSON and CSV score maps") {
    TempDir tmp;
    const auto r = run({"explain", "--model", (data_dir / "identity_model.json").string(), "--input",
                        (data_dir / "identity_input.json").string(), "--delta", "0.4", "--hard", "--patch", "none",
                        "--smooth-n", "0", "--output", tmp / "scores.json"});
    REQUIRE(r.code == 0);
    const auto j = io::read_json(tmp / "scores.json");
    CHECK(j["objective"].get<double>() == doctest::Approx(1.6));
    for (const auto& s : j["per_feature"]) CHECK(s.get<double>() == doctest::Approx(0.0));
    CHECK(io::read_text(tmp / "scores.csv") == "feature,score\n0,0.0\n1,0.0\n");

    const auto c = run({"explain", "--model", (data_dir / "constant_model.json").string(), "--input",
                        (data_dir / "identity_input.json").string()});
    REQUIRE(c.code == 0);
    for (const auto& s : io::json::parse(c.out)["per_feature"]) CHECK(s.get<double>() == 0.0);
}

TEST_CASE("explain warns when the slack saturates every group") {
    const std::string model = (data_dir / "identity_model.json").string();
    const std::string input = (data_dir / "identity_input.json").string();
    const auto cheap = run({"explain", "--model", model, "--input", input, "--delta", "0.6", "--patch", "none",
                            "--smooth-n", "0"});
    REQUIRE(cheap.code == 0);
    CHECK(cheap.err.find("--lambda") != std::string::npos);

    const auto costly = run({"explain", "--model", model, "--input", input, "--delta", "0.6", "--patch", "none",
                             "--smooth-n", "0", "--lambda", "10"});
    REQUIRE(costly.code == 0);
    CHECK(costly.err.empty());
    CHECK(io::json::parse(costly.out)["objective"].get<double>() == doctest::Approx(2.2));
}

TEST_CASE("explain defaults: delta 0.1, 8x8 patches, soft with smoothing") {
    TempDir tmp;
    std::mt19937_64 rng(1);
    const Dataset ds = pattern_dataset(1, 4);
    write(tmp / "input.json", io::json{{"values", io::dataset_to_json(ds)["inputs"][0]}, {"shape", {16, 16, 1}}}.dump());
    write(tmp / "model.json", io::model_to_json(train_mlp(pattern_dataset(60, 2), 3, TrainConfig{16, 1, 32, 1e-3, 3})).dump());
    const auto r = run({"explain", "--model", tmp / "model.json", "--input", tmp / "input.json"});
    REQUIRE(r.code == 0);
    const auto j = io::json::parse(r.out);
    CHECK(j["delta"] == 0.1);
    CHECK(j["per_group"].size() == 4);
    CHECK(j["per_feature"].size() == 256);
    CHECK(j.contains("w"));

    for (const std::string method : {"gradient", "smoothgrad", "intgrad", "occlusion", "random"}) {
        const auto b = run({"explain", "--model", tmp / "model.json", "--input", tmp / "input.json", "--method", method,
                            "--occlusion-mask", "4x4x1"});
        CHECK(b.code == 0);
        CHECK(io::json::parse(b.out)["method"] == method);
    }
}

TEST_CASE("invalid configuration exits 1 without writing output") {
    TempDir tmp;
    const std::string model = (data_dir / "identity_model.json").string();
    const std::string input = (data_dir / "identity_input.json").string();
    const std::vector<std::vector<std::string>> bad{
        {"explain", "--model", model, "--input", input, "--delta", "-1", "--output", tmp / "o.json"},
        {"explain", "--model", model, "--input", input, "--patch", "8by8", "--output", tmp / "o.json"},
        {"explain", "--model", model, "--input", input, "--method", "lrp", "--output", tmp / "o.json"},
        {"explain", "--model", model, "--input", input, "--hard", "--soft", "--output", tmp / "o.json"},
        {"explain", "--model", tmp / "nope.json", "--input", input, "--output", tmp / "o.json"},
        {"explain", "--input", input, "--output", tmp / "o.json"},
        {"evaluate", "--model", model, "--dataset", (data_dir / "tiny_dataset.json").string(), "--tau-grid", "50,10",
         "--output", tmp / "o.json"},
        {"frobnicate"},
    };
    for (const auto& args : bad) {
        CAPTURE(args.size());
        CHECK(run(args).code == 1);
        CHECK_FALSE(fs::exists(tmp / "o.json"));
    }
}

TEST_CASE("hard mode infeasibility exits 2") {
    TempDir tmp;
    write(tmp / "model.json", R"({"input_dim": 1, "layers": [
        {"weights": [[1]], "bias": [0], "activation": "relu"},
        {"weights": [[1], [0]], "bias": [0, 0.5], "activation": "identity"}]})");
    write(tmp / "x.json", "[1]");
    const auto r = run({"explain", "--model", tmp / "model.json", "--input", tmp / "x.json", "--hard", "--patch",
                        "none", "--smooth-sigma", "5", "--seed", "1", "--output", tmp / "o.json"});
    CHECK(r.code == 2);
    CHECK(r.err.find("--soft") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp / "o.json"));
}

TEST_CASE("evaluate") {
    TempDir tmp;
    const std::string dataset = (data_dir / "tiny_dataset.json").string();
    const auto zero = run({"evaluate", "--model", (data_dir / "identity_model.json").string(), "--dataset", dataset,
                           "--method", "maxinv,gradient,random", "--tau-grid", "0", "--patch", "none"});
    REQUIRE(zero.code == 0);
    CHECK(zero.out == "method,tau,change_ratio\nmaxinv,0,0\ngradient,0,0\nrandom,0,0\n");

    const auto flat = run({"evaluate", "--model", (data_dir / "constant_model.json").string(), "--dataset", dataset,
                           "--method", "random", "--patch", "none"});
    REQUIRE(flat.code == 0);
    std::istringstream lines(flat.out);
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) CHECK(line.substr(line.rfind(',') + 1) == "0");

    const auto a = run({"evaluate", "--model", (data_dir / "identity_model.json").string(), "--dataset", dataset,
                        "--method", "maxinv", "--method", "smoothgrad", "--patch", "none", "--seed", "3", "--jobs", "1"});
    const auto b = run({"evaluate", "--model", (data_dir / "identity_model.json").string(), "--dataset", dataset,
                        "--method", "maxinv", "--method", "smoothgrad", "--patch", "none", "--seed", "3", "--jobs", "3"});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);

    write(tmp / "scores.json", R"({"scores": [[1, 0], [0, 1], [1, 0], [0, 1]]})");
    const auto ext = run({"evaluate", "--model", (data_dir / "identity_model.json").string(), "--dataset", dataset,
                          "--method", "external", "--scores-file", tmp / "scores.json", "--tau-grid", "0,100",
                          "--patch", "none", "--output", tmp / "curve.csv"});
    CHECK(ext.code == 0);
    CHECK(io::read_text(tmp / "curve.csv").rfind("method,tau,change_ratio\nexternal,0,0\n", 0) == 0);
}
