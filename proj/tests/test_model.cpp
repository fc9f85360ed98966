#include "fixtures.hpp"
#include "oracles.hpp"

#include "maxinv/model.hpp"

#include <doctest.h>

#include <random>

using namespace maxinv;
using namespace maxinv::testing;

namespace {

// 2 -> 2 (relu) -> 2 with hand-picked weights.
ModelD hand_net() {
    Mat w1(2, 2), w2(2, 2);
    w1 << 1, -1, 2, 1;
    w2 << 1, 1, -1, 2;
    Vec b1(2), b2(2);
    b1 << 0, -1;
    b2 << 0.5, 0;
    return ModelD(2, {{w1, b1, Activation::Relu}, {w2, b2, Activation::Identity}});
}

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_CASE("forward on identity and constant models") {
    CHECK(forward(identity_model_2d(), vec2(1, 0)) == vec2(1, 0));
    CHECK(forward(constant_model(2), vec2(0.3, -7)) == vec2(1, 0));
}

TEST_CASE("forward matches a hand evaluation of a relu net") {
    // z1 = (1 - 2, 2 + 2 - 1) = (-1, 3) -> a1 = (0, 3); y = (3 + 0.5, 6).
    CHECK(forward(hand_net(), vec2(1, 2)) == vec2(3.5, 6.0));
}

TEST_CASE("predict_class uses the lowest index on ties") {
    Vec y3(3);
    y3 << 0.1, 0.9, 0.3;
    CHECK(argmax(vec2(1, 0)) == 0);
    CHECK(argmax(vec2(0.5, 0.5)) == 0);
    CHECK(argmax(y3) == 1);
    CHECK(predict_class(identity_model_2d(), vec2(0.5, 0.5)) == 0);
}

TEST_CASE("gradient of a linear model is the weight row") {
    std::mt19937_64 rng(3);
    const ModelD m = random_linear(rng, 5, 4);
    const Vec x = random_vector(rng, 5);
    for (Index j = 0; j < 4; ++j) {
        CHECK(gradient(m, x, j) == Vec(m.layers()[0].weights.row(j).transpose()));
        CHECK((finite_difference_gradient(m, x, j, 1e-5) - m.layers()[0].weights.row(j).transpose()).cwiseAbs().maxCoeff() < 1e-10);
    }
    CHECK(gradient(constant_model(3), Vec::Ones(3), 1).isZero(0.0));
    CHECK(finite_difference_gradient(constant_model(3), Vec::Ones(3), 1, 1e-5).isZero(0.0));
}

TEST_CASE("gradient of the hand net") {
    // Only the second hidden unit is active: d y / dx = W2[:,1] * W1[1,:].
    CHECK(gradient(hand_net(), vec2(1, 2), 0) == vec2(2, 1));
    CHECK(gradient(hand_net(), vec2(1, 2), 1) == vec2(4, 2));
}

TEST_CASE("relu derivative at the kink is zero") {
    const ModelD m(1, {{Mat::Ones(1, 1), Vec::Zero(1), Activation::Relu}, {Mat::Ones(1, 1), Vec::Zero(1), Activation::Identity}});
    CHECK(gradient(m, Vec::Zero(1), 0)[0] == 0.0);
    CHECK(gradient(m, Vec::Constant(1, 1e-12), 0)[0] == 1.0);
}

TEST_CASE("gradient agrees with finite differences on random MLPs") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> dim(1, 32), classes(2, 6), depth(1, 3);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const ModelD m = random_mlp(rng, dim(rng), classes(rng), depth(rng));
        const Vec x = random_vector(rng, m.input_dim(), -1.0, 1.0);
        if (kink_distance(m, x) < 1e-6 || stencil_crosses_kink(m, x, 1e-5)) continue;
        for (Index j = 0; j < m.num_classes(); ++j) {
            CHECK(max_relative_error(gradient(m, x, j), finite_difference_gradient(m, x, j, 1e-5)) < 1e-5);
        }
        ++checked;
    }
    CHECK(checked > 90);
}

TEST_CASE("softmax output gradient matches finite differences") {
    std::mt19937_64 rng(5);
    const ModelD m = random_mlp(rng, 6, 3, 2, false).with_output(OutputKind::Softmax);
    const Vec x = random_vector(rng, 6);
    CHECK(m.forward(x).sum() == doctest::Approx(1.0));
    for (Index j = 0; j < 3; ++j) {
        CHECK(max_relative_error(gradient(m, x, j), finite_difference_gradient(m, x, j, 1e-5)) < 1e-8);
    }
    const ModelD logits = m.with_output(OutputKind::Logits);
    CHECK(predict_class(m, x) == predict_class(logits, x));
}

TEST_CASE("forward and gradient are deterministic") {
    std::mt19937_64 rng(9);
    const ModelD m = random_mlp(rng, 12, 4, 3);
    const Vec x = random_vector(rng, 12);
    CHECK(m.forward(x) == m.forward(x));
    CHECK(m.gradient(x, 2) == m.gradient(x, 2));
}

TEST_CASE("model validation rejects bad shapes and inputs") {
    CHECK_THROWS_AS(ModelD(3, {{Mat::Zero(2, 2), Vec::Zero(2), Activation::Identity}}), InputError);
    CHECK_THROWS_AS(ModelD(2, {{Mat::Zero(2, 2), Vec::Zero(3), Activation::Identity}}), InputError);
    Mat bad = Mat::Zero(2, 2);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(ModelD(2, {{bad, Vec::Zero(2), Activation::Identity}}), InputError);
    CHECK_THROWS_AS(ModelD(2, {}), InputError);
    CHECK_THROWS_AS(identity_model_2d().forward(Vec::Zero(3)), InputError);
    CHECK_THROWS_AS(identity_model_2d().gradient(Vec::Zero(2), 2), InputError);
    CHECK_THROWS_AS(finite_difference_gradient(identity_model_2d(), Vec::Zero(2), 0, 0.0), InputError);
    CHECK_THROWS_AS(parse_activation("sigmoid"), InputError);
}

TEST_CASE("model works in single precision") {
    Model<float> m(2, {{Matrix<float>::Identity(2, 2), Vector<float>::Zero(2), Activation::Tanh}});
    Vector<float> x(2);
    x << 0.5f, -0.25f;
    CHECK(m.gradient(x, 0)[0] == doctest::Approx(1.0 - std::tanh(0.5) * std::tanh(0.5)).epsilon(1e-6));
}
