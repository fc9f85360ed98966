#pragma once

#include "maxinv/types.hpp"

#include <optional>
#include <vector>

namespace maxinv {

struct PatchGrid {
    Index patch_height = 8;
    Index patch_width = 8;
};

/// Disjoint groups of feature indices covering {0, ..., d-1}. Features in
/// the same group share one pair of perturbation bounds.
class FeaturePartition {
public:
    FeaturePartition(std::vector<std::vector<Index>> groups, Index dim);

    // Every feature in its own group.
    static FeaturePartition singletons(Index dim);
    // All features in one group.
    static FeaturePartition whole(Index dim);
    // Non-overlapping patches per channel. Edge patches are truncated when
    // the patch size does not divide the image. Groups are ordered by
    // (patch row, patch column, channel).
    static FeaturePartition patches(const Shape& shape, const PatchGrid& grid);

    Index dim() const { return dim_; }
    Index num_groups() const { return static_cast<Index>(groups_.size()); }
    const std::vector<Index>& group(Index m) const { return groups_[static_cast<std::size_t>(m)]; }
    const std::vector<std::vector<Index>>& groups() const { return groups_; }
    Index group_of(Index feature) const { return owner_[static_cast<std::size_t>(feature)]; }

    const std::optional<PatchGrid>& grid() const { return grid_; }

    // Broadcasts one value per group to every feature of that group.
    Vec broadcast(const Vec& per_group) const;

private:
    std::vector<std::vector<Index>> groups_;
    std::vector<Index> owner_;
    Index dim_;
    std::optional<PatchGrid> grid_;
};

}  // namespace maxinv
