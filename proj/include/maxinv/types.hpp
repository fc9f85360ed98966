#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <optional>

namespace maxinv {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Vec = Vector<double>;
using Mat = Matrix<double>;
using Index = Eigen::Index;

// Height, width, channels of an input laid out row-major as (y, x, c).
struct Shape {
    Index height = 1;
    Index width = 1;
    Index channels = 1;

    Index size() const { return height * width * channels; }
    Index offset(Index y, Index x, Index c) const { return (y * width + x) * channels + c; }

    bool operator==(const Shape&) const = default;
};

// Flat layout used when an input carries no shape metadata.
inline Shape flat_shape(Index d) { return Shape{1, d, 1}; }

}  // namespace maxinv
