#include "maxinv/partition.hpp"

#include "maxinv/error.hpp"

#include <algorithm>
#include <string>

namespace maxinv {

FeaturePartition::FeaturePartition(std::vector<std::vector<Index>> groups, Index dim)
    : groups_(std::move(groups)), owner_(static_cast<std::size_t>(std::max<Index>(dim, 0)), -1), dim_(dim) {
    if (dim_ <= 0) throw InputError("partition dimension must be positive");
    if (groups_.empty()) throw InputError("partition needs at least one group");
    Index covered = 0;
    for (std::size_t m = 0; m < groups_.size(); ++m) {
        if (groups_[m].empty()) throw InputError("partition group " + std::to_string(m) + " is empty");
        for (Index i : groups_[m]) {
            if (i < 0 || i >= dim_) throw InputError("partition index " + std::to_string(i) + " out of range");
            auto& slot = owner_[static_cast<std::size_t>(i)];
            if (slot >= 0) throw InputError("feature " + std::to_string(i) + " appears in two groups");
            slot = static_cast<Index>(m);
            ++covered;
        }
    }
    if (covered != dim_) throw InputError("partition does not cover every feature");
}

FeaturePartition FeaturePartition::singletons(Index dim) {
    std::vector<std::vector<Index>> groups(static_cast<std::size_t>(std::max<Index>(dim, 0)));
    for (Index i = 0; i < dim; ++i) groups[static_cast<std::size_t>(i)] = {i};
    return FeaturePartition(std::move(groups), dim);
}

FeaturePartition FeaturePartition::whole(Index dim) {
    std::vector<Index> all(static_cast<std::size_t>(std::max<Index>(dim, 0)));
    for (Index i = 0; i < dim; ++i) all[static_cast<std::size_t>(i)] = i;
    return FeaturePartition({std::move(all)}, dim);
}

FeaturePartition FeaturePartition::patches(const Shape& shape, const PatchGrid& grid) {
    if (shape.height <= 0 || shape.width <= 0 || shape.channels <= 0) throw InputError("shape must be positive");
    if (grid.patch_height <= 0 || grid.patch_width <= 0) throw InputError("patch size must be positive");
    std::vector<std::vector<Index>> groups;
    for (Index py = 0; py < shape.height; py += grid.patch_height) {
        for (Index px = 0; px < shape.width; px += grid.patch_width) {
            for (Index c = 0; c < shape.channels; ++c) {
                std::vector<Index> g;
                for (Index y = py; y < std::min(py + grid.patch_height, shape.height); ++y) {
                    for (Index x = px; x < std::min(px + grid.patch_width, shape.width); ++x) {
                        g.push_back(shape.offset(y, x, c));
                    }
                }
                std::sort(g.begin(), g.end());
                groups.push_back(std::move(g));
            }
        }
    }
    FeaturePartition p(std::move(groups), shape.size());
    p.grid_ = grid;
    return p;
}

Vec FeaturePartition::broadcast(const Vec& per_group) const {
    if (per_group.size() != num_groups()) throw InputError("per-group vector does not match partition");
    Vec out(dim_);
    for (Index i = 0; i < dim_; ++i) out[i] = per_group[owner_[static_cast<std::size_t>(i)]];
    return out;
}

}  // namespace maxinv
