#include "fixtures.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace maxinv::testing {

ModelD identity_model_2d() { return ModelD(2, {{Mat::Identity(2, 2), Vec::Zero(2), Activation::Identity}}); }

ModelD constant_model(Index d) {
    Vec b(2);
    b << 1.0, 0.0;
    return ModelD(d, {{Mat::Zero(2, d), b, Activation::Identity}});
}

Dataset pattern_dataset(std::size_t count, std::uint64_t seed) {
    constexpr Index side = 16;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> background(0.3, 0.7);
    std::uniform_int_distribution<int> cls(0, 2);
    std::uniform_int_distribution<int> pos(2, side - 4);

    Dataset ds;
    ds.shape = Shape{side, side, 1};
    ds.labels = std::vector<int>();
    for (std::size_t n = 0; n < count; ++n) {
        Vec x(side * side);
        for (Index i = 0; i < x.size(); ++i) x[i] = background(rng);
        const int label = cls(rng);
        const int a = pos(rng);
        const int b = pos(rng);
        switch (label) {
            case 0:  // horizontal bar, 2 rows, 10 columns
                for (Index y = a; y < a + 2; ++y)
                    for (Index c = 3; c < 13; ++c) x[ds.shape.offset(y, c, 0)] = 1.0;
                break;
            case 1:  // vertical bar
                for (Index y = 3; y < 13; ++y)
                    for (Index c = a; c < a + 2; ++c) x[ds.shape.offset(y, c, 0)] = 1.0;
                break;
            default:  // 4x4 square
                for (Index y = std::min(a, 11); y < std::min(a, 11) + 4; ++y)
                    for (Index c = std::min(b, 11); c < std::min(b, 11) + 4; ++c) x[ds.shape.offset(y, c, 0)] = 1.0;
                break;
        }
        ds.inputs.push_back(std::move(x));
        ds.labels->push_back(label);
    }
    return ds;
}

namespace {

struct AdamState {
    Eigen::MatrixXd m, v;
    void init(Index rows, Index cols) {
        m = Eigen::MatrixXd::Zero(rows, cols);
        v = Eigen::MatrixXd::Zero(rows, cols);
    }
    template <typename Param>
    void step(Param& param, const Eigen::MatrixXd& grad, double lr, int t) {
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        m = b1 * m + (1 - b1) * grad;
        v = b2 * v + (1 - b2) * grad.cwiseProduct(grad);
        const double c1 = 1 - std::pow(b1, t), c2 = 1 - std::pow(b2, t);
        param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }
};

}  // namespace

ModelD train_mlp(const Dataset& train, int num_classes, const TrainConfig& cfg) {
    const Index d = train.dim();
    const Index h = cfg.hidden;
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto he = [&](Index rows, Index cols) {
        Eigen::MatrixXd w(rows, cols);
        const double s = std::sqrt(2.0 / static_cast<double>(cols));
        for (Index r = 0; r < rows; ++r)
            for (Index c = 0; c < cols; ++c) w(r, c) = s * normal(rng);
        return w;
    };
    std::vector<Eigen::MatrixXd> w{he(h, d), he(h, h), he(num_classes, h)};
    std::vector<Eigen::VectorXd> b{Eigen::VectorXd::Zero(h), Eigen::VectorXd::Zero(h),
                                   Eigen::VectorXd::Zero(num_classes)};
    std::vector<AdamState> aw(3), ab(3);
    for (int l = 0; l < 3; ++l) {
        aw[l].init(w[l].rows(), w[l].cols());
        ab[l].init(b[l].size(), 1);
    }

    std::vector<std::size_t> order(train.inputs.size());
    std::iota(order.begin(), order.end(), 0);
    int t = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
            const Index n = static_cast<Index>(end - start);
            Eigen::MatrixXd x(d, n);
            Eigen::MatrixXd target = Eigen::MatrixXd::Zero(num_classes, n);
            for (Index k = 0; k < n; ++k) {
                const std::size_t idx = order[start + static_cast<std::size_t>(k)];
                x.col(k) = train.inputs[idx];
                target((*train.labels)[idx], k) = 1.0;
            }
            const Eigen::MatrixXd z1 = (w[0] * x).colwise() + b[0];
            const Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
            const Eigen::MatrixXd z2 = (w[1] * a1).colwise() + b[1];
            const Eigen::MatrixXd a2 = z2.cwiseMax(0.0);
            Eigen::MatrixXd logits = (w[2] * a2).colwise() + b[2];
            for (Index k = 0; k < n; ++k) {
                logits.col(k) = (logits.col(k).array() - logits.col(k).maxCoeff()).exp();
                logits.col(k) /= logits.col(k).sum();
            }
            const Eigen::MatrixXd g3 = (logits - target) / static_cast<double>(n);
            const Eigen::MatrixXd g2 = (w[2].transpose() * g3).cwiseProduct((z2.array() > 0.0).cast<double>().matrix());
            const Eigen::MatrixXd g1 = (w[1].transpose() * g2).cwiseProduct((z1.array() > 0.0).cast<double>().matrix());

            ++t;
            aw[2].step(w[2], g3 * a2.transpose(), cfg.learning_rate, t);
            ab[2].step(b[2], g3.rowwise().sum(), cfg.learning_rate, t);
            aw[1].step(w[1], g2 * a1.transpose(), cfg.learning_rate, t);
            ab[1].step(b[1], g2.rowwise().sum(), cfg.learning_rate, t);
            aw[0].step(w[0], g1 * x.transpose(), cfg.learning_rate, t);
            ab[0].step(b[0], g1.rowwise().sum(), cfg.learning_rate, t);
        }
    }

    std::vector<DenseLayer<double>> layers;
    const Activation acts[3] = {Activation::Relu, Activation::Relu, Activation::Identity};
    for (int l = 0; l < 3; ++l) layers.push_back({Mat(w[l]), Vec(b[l]), acts[l]});
    return ModelD(d, std::move(layers));
}

double accuracy(const ModelD& model, const Dataset& data) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.inputs.size(); ++i) {
        if (predict_class(model, data.inputs[i]) == (*data.labels)[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.inputs.size());
}

}  // namespace maxinv::testing
