#pragma once

#include "maxinv/error.hpp"
#include "maxinv/types.hpp"

#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace maxinv {

enum class Activation { Identity, Relu, Tanh };

// Which output the class comparisons are made on. Argmax is identical for
// both; only the values and gradients differ.
enum class OutputKind { Logits, Softmax };

inline std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
    }
    return "identity";
}

inline Activation parse_activation(std::string_view name) {
    if (name == "identity" || name == "linear") return Activation::Identity;
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    throw InputError("unknown activation '" + std::string(name) + "'");
}

template <typename Scalar>
struct DenseLayer {
    Matrix<Scalar> weights;  // out x in
    Vector<Scalar> bias;     // out
    Activation activation = Activation::Identity;

    Index in_dim() const { return weights.cols(); }
    Index out_dim() const { return weights.rows(); }
};

namespace detail {

template <typename Scalar>
Scalar activate(Activation a, Scalar z) {
    switch (a) {
        case Activation::Identity: return z;
        case Activation::Relu: return z > Scalar(0) ? z : Scalar(0);
        case Activation::Tanh: return std::tanh(z);
    }
    return z;
}

// relu'(0) is taken as 0.
template <typename Scalar>
Scalar activate_derivative(Activation a, Scalar z) {
    switch (a) {
        case Activation::Identity: return Scalar(1);
        case Activation::Relu: return z > Scalar(0) ? Scalar(1) : Scalar(0);
        case Activation::Tanh: {
            const Scalar t = std::tanh(z);
            return Scalar(1) - t * t;
        }
    }
    return Scalar(1);
}

}  // namespace detail

/// Feed-forward classifier f : R^d -> R^k built from dense layers.
///
/// Immutable once constructed. forward() and gradient() only read the
/// weights, so one instance may be shared by many threads.
template <typename Scalar>
class Model {
public:
    using VectorType = Vector<Scalar>;

    Model(Index input_dim, std::vector<DenseLayer<Scalar>> layers,
          OutputKind output = OutputKind::Logits)
        : input_dim_(input_dim), layers_(std::move(layers)), output_(output) {
        if (input_dim_ <= 0) throw InputError("model input_dim must be positive");
        if (layers_.empty()) throw InputError("model needs at least one layer");
        Index width = input_dim_;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& layer = layers_[l];
            if (layer.in_dim() != width) {
                throw InputError("layer " + std::to_string(l) + " expects input of size " +
                                 std::to_string(layer.in_dim()) + " but previous width is " +
                                 std::to_string(width));
            }
            if (layer.bias.size() != layer.out_dim()) {
                throw InputError("layer " + std::to_string(l) + " bias size does not match weights");
            }
            if (layer.out_dim() <= 0) throw InputError("layer " + std::to_string(l) + " is empty");
            if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
                throw InputError("layer " + std::to_string(l) + " has non-finite parameters");
            }
            width = layer.out_dim();
        }
    }

    Index input_dim() const { return input_dim_; }
    Index num_classes() const { return layers_.back().out_dim(); }
    OutputKind output_kind() const { return output_; }
    const std::vector<DenseLayer<Scalar>>& layers() const { return layers_; }

    Model with_output(OutputKind output) const { return Model(input_dim_, layers_, output); }

    VectorType forward(const VectorType& x) const {
        check_input(x);
        VectorType a = x;
        for (const auto& layer : layers_) {
            VectorType z = layer.weights * a + layer.bias;
            a = z.unaryExpr([&](Scalar s) { return detail::activate(layer.activation, s); });
        }
        if (output_ == OutputKind::Softmax) a = softmax(a);
        return a;
    }

    /// Gradient of output j with respect to the input, by reverse-mode
    /// accumulation through the layer chain.
    VectorType gradient(const VectorType& x, Index j) const {
        if (j < 0 || j >= num_classes()) {
            throw InputError("class index " + std::to_string(j) + " out of range [0, " +
                             std::to_string(num_classes()) + ")");
        }
        check_input(x);
        std::vector<VectorType> pre;
        pre.reserve(layers_.size());
        VectorType a = x;
        for (const auto& layer : layers_) {
            pre.push_back(layer.weights * a + layer.bias);
            a = pre.back().unaryExpr([&](Scalar s) { return detail::activate(layer.activation, s); });
        }

        VectorType adjoint = VectorType::Zero(num_classes());
        if (output_ == OutputKind::Softmax) {
            // d p_j / d a_k = p_j (delta_jk - p_k)
            const VectorType p = softmax(a);
            adjoint = -p[j] * p;
            adjoint[j] += p[j];
        } else {
            adjoint[j] = Scalar(1);
        }

        for (std::size_t l = layers_.size(); l-- > 0;) {
            const auto& layer = layers_[l];
            adjoint.array() *= pre[l].unaryExpr([&](Scalar s) {
                return detail::activate_derivative(layer.activation, s);
            }).array();
            adjoint = layer.weights.transpose() * adjoint;
        }
        return adjoint;
    }

    static VectorType softmax(const VectorType& a) {
        const VectorType e = (a.array() - a.maxCoeff()).exp().matrix();
        return e / e.sum();
    }

private:
    void check_input(const VectorType& x) const {
        if (x.size() != input_dim_) {
            throw InputError("input has " + std::to_string(x.size()) + " features, model expects " +
                             std::to_string(input_dim_));
        }
    }

    Index input_dim_;
    std::vector<DenseLayer<Scalar>> layers_;
    OutputKind output_;
};

using ModelD = Model<double>;

/// Lowest index attaining the maximum of y.
template <typename Derived>
Index argmax(const Eigen::MatrixBase<Derived>& y) {
    Index best = 0;
    for (Index i = 1; i < y.size(); ++i) {
        if (y[i] > y[best]) best = i;
    }
    return best;
}

template <typename Scalar, typename Derived>
Index predict_class(const Model<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
    return argmax(model.forward(x.template cast<Scalar>()));
}

template <typename Scalar, typename Derived>
Vector<Scalar> forward(const Model<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
    return model.forward(x.template cast<Scalar>());
}

template <typename Scalar, typename Derived>
Vector<Scalar> gradient(const Model<Scalar>& model, const Eigen::MatrixBase<Derived>& x, Index j) {
    return model.gradient(x.template cast<Scalar>(), j);
}

// Central differences (f_j(x + h e_i) - f_j(x - h e_i)) / 2h.
template <typename Scalar, typename Derived>
Vector<Scalar> finite_difference_gradient(const Model<Scalar>& model, const Eigen::MatrixBase<Derived>& x,
                                          Index j, Scalar step) {
    if (!(step > Scalar(0))) throw InputError("finite-difference step must be positive");
    if (j < 0 || j >= model.num_classes()) throw InputError("class index out of range");
    const Vector<Scalar> origin = x.template cast<Scalar>();
    Vector<Scalar> g(origin.size());
    Vector<Scalar> probe = origin;
    for (Index i = 0; i < origin.size(); ++i) {
        probe[i] = origin[i] + step;
        const Scalar up = model.forward(probe)[j];
        probe[i] = origin[i] - step;
        const Scalar down = model.forward(probe)[j];
        probe[i] = origin[i];
        g[i] = (up - down) / (Scalar(2) * step);
    }
    return g;
}

}  // namespace maxinv
