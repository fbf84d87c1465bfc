#pragma once

#include <cstdint>
#include <vector>

#include "lbpcg/content.hpp"

namespace lbpcg {

struct ClusterPartition {
    ContentSchema schema;
    std::vector<ContentVector> points;
    std::vector<ContentVector> medoids;
    std::vector<int> assignment;  // point index -> cluster index
    double total_cost = 0.0;

    std::size_t k() const { return medoids.size(); }
    void validate() const;

    friend bool operator==(const ClusterPartition&,
                           const ClusterPartition&) = default;
};

// K-medoids with farthest-point seeding from a seeded random start, then
// alternating assignment / in-cluster medoid updates. Cost never increases
// per iteration; stops at a fixed point or max_iters.
ClusterPartition k_medoids(const std::vector<ContentVector>& points, int k,
                           const ContentSchema& schema, std::uint64_t seed,
                           int max_iters = 50);

// Uniform per-cluster sample without replacement; min(m, cluster size) games
// per cluster. Result is tagged Reduced (G').
ContentSubspace sample_per_cluster(const ClusterPartition& partition, int m,
                                   std::uint64_t seed);

// The K medoids, in cluster order.
std::vector<ContentVector> representative_per_cluster(
    const ClusterPartition& partition);

}  // namespace lbpcg
