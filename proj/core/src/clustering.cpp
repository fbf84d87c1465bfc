#include "lbpcg/clustering.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "lbpcg/rng.hpp"

namespace lbpcg {

void ClusterPartition::validate() const {
    if (assignment.size() != points.size()) {
        throw ContractError("partition assignment size mismatch");
    }
    for (int a : assignment) {
        if (a < 0 || a >= static_cast<int>(medoids.size())) {
            throw ContractError("partition assignment out of range");
        }
    }
}

namespace {

// Assigns each point to its nearest medoid (ties -> lowest cluster index)
// and returns total cost.
double assign_points(const std::vector<ContentVector>& points,
                     const std::vector<int>& medoid_idx,
                     const ContentSchema& schema, std::vector<int>& assignment) {
    double cost = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_c = 0;
        for (std::size_t c = 0; c < medoid_idx.size(); ++c) {
            const double d = distance(points[i], points[medoid_idx[c]], schema);
            if (d < best) {
                best = d;
                best_c = static_cast<int>(c);
            }
        }
        assignment[i] = best_c;
        cost += best;
    }
    return cost;
}

}  // namespace

ClusterPartition k_medoids(const std::vector<ContentVector>& points, int k,
                           const ContentSchema& schema, std::uint64_t seed,
                           int max_iters) {
    if (k < 1) throw ConfigError("k_medoids requires k >= 1");
    if (static_cast<std::size_t>(k) > points.size()) {
        throw ConfigError("k_medoids: k exceeds point count");
    }
    for (const auto& p : points) require_valid(p, schema);

    const std::size_t n = points.size();
    Rng rng(seed);

    // farthest-point seeding from a random start
    std::vector<int> medoid_idx;
    medoid_idx.reserve(k);
    medoid_idx.push_back(static_cast<int>(rng.below(n)));
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    while (static_cast<int>(medoid_idx.size()) < k) {
        const int last = medoid_idx.back();
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], distance(points[i], points[last], schema));
        }
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (nearest[i] > far_d) {
                far_d = nearest[i];
                far = i;
            }
        }
        medoid_idx.push_back(static_cast<int>(far));
    }

    std::vector<int> assignment(n, 0);
    double cost = assign_points(points, medoid_idx, schema, assignment);

    for (int iter = 0; iter < max_iters; ++iter) {
        // per-cluster medoid update: member minimizing total in-cluster cost
        std::vector<std::vector<int>> clusters(k);
        for (std::size_t i = 0; i < n; ++i) {
            clusters[assignment[i]].push_back(static_cast<int>(i));
        }
        bool changed = false;
        for (int c = 0; c < k; ++c) {
            const auto& members = clusters[c];
            if (members.empty()) continue;
            int best = medoid_idx[c];
            double best_cost = 0.0;
            for (int i : members) {
                best_cost += distance(points[i], points[medoid_idx[c]], schema);
            }
            for (int cand : members) {
                double cand_cost = 0.0;
                for (int i : members) {
                    cand_cost += distance(points[i], points[cand], schema);
                    if (cand_cost >= best_cost) break;
                }
                if (cand_cost < best_cost) {
                    best_cost = cand_cost;
                    best = cand;
                }
            }
            if (best != medoid_idx[c]) {
                medoid_idx[c] = best;
                changed = true;
            }
        }
        if (!changed) break;
        const double new_cost = assign_points(points, medoid_idx, schema, assignment);
        cost = new_cost;
    }

    ClusterPartition out;
    out.schema = schema;
    out.points = points;
    out.assignment = std::move(assignment);
    out.medoids.reserve(k);
    for (int idx : medoid_idx) out.medoids.push_back(points[idx]);
    out.total_cost = cost;
    return out;
}

ContentSubspace sample_per_cluster(const ClusterPartition& partition, int m,
                                   std::uint64_t seed) {
    if (m < 1) throw ConfigError("sample_per_cluster requires m >= 1");
    partition.validate();

    std::vector<std::vector<int>> clusters(partition.k());
    for (std::size_t i = 0; i < partition.points.size(); ++i) {
        clusters[partition.assignment[i]].push_back(static_cast<int>(i));
    }

    ContentSubspace out;
    out.schema = partition.schema;
    out.tag = SubspaceTag::Reduced;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        auto& members = clusters[c];
        Rng rng(derive_seed(seed, c));
        rng.shuffle(members);
        const std::size_t take = std::min<std::size_t>(m, members.size());
        for (std::size_t i = 0; i < take; ++i) {
            out.members.push_back(partition.points[members[i]]);
        }
    }
    std::sort(out.members.begin(), out.members.end());
    return out;
}

std::vector<ContentVector> representative_per_cluster(
    const ClusterPartition& partition) {
    if (partition.medoids.empty()) {
        throw ContractError("representative_per_cluster on empty partition");
    }
    return partition.medoids;
}

}  // namespace lbpcg
