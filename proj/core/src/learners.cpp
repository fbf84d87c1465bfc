#include "lbpcg/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lbpcg/rng.hpp"

namespace lbpcg {

void Dataset::validate() const {
    if (inputs.size() != targets.size()) {
        throw ContractError("dataset inputs/targets size mismatch");
    }
    const std::size_t d = dims();
    for (const auto& row : inputs) {
        if (row.size() != d) {
            throw DimensionMismatchError("dataset rows have differing lengths");
        }
    }
    if (task == Task::Classification) {
        for (double t : targets) {
            if (t != 0.0 && t != 1.0) {
                throw ContractError("classification targets must be 0 or 1");
            }
        }
    }
}

std::uint64_t Dataset::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        h = fnv1a(inputs[i].data(), inputs[i].size() * sizeof(double), h);
        h = fnv1a(&targets[i], sizeof(double), h);
    }
    return h;
}

namespace {

struct TreeBuilder {
    const Dataset& data;
    const ForestConfig& cfg;
    Rng& rng;
    std::vector<TreeNode> nodes;

    int make_leaf(const std::vector<int>& idx) {
        int pos = 0;
        for (int i : idx) pos += data.targets[i] == 1.0 ? 1 : 0;
        TreeNode leaf;
        leaf.feature = -1;
        leaf.label = (2 * pos > static_cast<int>(idx.size())) ? 1 : 0;
        leaf.prob_positive =
            idx.empty() ? 0.5 : static_cast<double>(pos) / idx.size();
        nodes.push_back(leaf);
        return static_cast<int>(nodes.size()) - 1;
    }

    int build(std::vector<int> idx, int depth) {
        int pos = 0;
        for (int i : idx) pos += data.targets[i] == 1.0 ? 1 : 0;
        const int n = static_cast<int>(idx.size());
        if (depth >= cfg.max_depth || n < 2 * cfg.min_leaf || pos == 0 ||
            pos == n) {
            return make_leaf(idx);
        }

        const int dims = static_cast<int>(data.dims());
        int fps = cfg.features_per_split > 0
                      ? std::min(cfg.features_per_split, dims)
                      : std::max(1, static_cast<int>(std::lround(
                                        std::sqrt(static_cast<double>(dims)))));

        // partial Fisher-Yates feature sample
        std::vector<int> feats(dims);
        std::iota(feats.begin(), feats.end(), 0);
        for (int i = 0; i < fps; ++i) {
            std::swap(feats[i], feats[i + rng.below(dims - i)]);
        }
        feats.resize(fps);

        const double parent_gini =
            1.0 - std::pow(static_cast<double>(pos) / n, 2) -
            std::pow(static_cast<double>(n - pos) / n, 2);

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_gain = 1e-12;
        std::vector<std::pair<double, int>> order(idx.size());

        for (int f : feats) {
            for (std::size_t i = 0; i < idx.size(); ++i) {
                order[i] = {data.inputs[idx[i]][f], idx[i]};
            }
            std::sort(order.begin(), order.end());
            int left_n = 0, left_pos = 0;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                ++left_n;
                left_pos += data.targets[order[i].second] == 1.0 ? 1 : 0;
                if (order[i].first == order[i + 1].first) continue;
                const int right_n = n - left_n;
                if (left_n < cfg.min_leaf || right_n < cfg.min_leaf) continue;
                const int right_pos = pos - left_pos;
                const double gl =
                    1.0 - std::pow(static_cast<double>(left_pos) / left_n, 2) -
                    std::pow(static_cast<double>(left_n - left_pos) / left_n, 2);
                const double gr =
                    1.0 - std::pow(static_cast<double>(right_pos) / right_n, 2) -
                    std::pow(static_cast<double>(right_n - right_pos) / right_n, 2);
                const double gain =
                    parent_gini - (left_n * gl + right_n * gr) / n;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = 0.5 * (order[i].first + order[i + 1].first);
                }
            }
        }

        if (best_feature < 0) return make_leaf(idx);

        std::vector<int> left_idx, right_idx;
        for (int i : idx) {
            (data.inputs[i][best_feature] <= best_threshold ? left_idx
                                                            : right_idx)
                .push_back(i);
        }
        TreeNode split;
        split.feature = best_feature;
        split.threshold = best_threshold;
        nodes.push_back(split);
        const int self = static_cast<int>(nodes.size()) - 1;
        nodes[self].left = build(std::move(left_idx), depth + 1);
        nodes[self].right = build(std::move(right_idx), depth + 1);
        return self;
    }
};

int tree_vote(const std::vector<TreeNode>& tree, std::span<const double> x) {
    int node = 0;
    while (tree[node].feature >= 0) {
        node = x[tree[node].feature] <= tree[node].threshold ? tree[node].left
                                                             : tree[node].right;
    }
    return tree[node].label;
}

}  // namespace

RandomForest RandomForest::train(const Dataset& data, const ForestConfig& config,
                                 std::uint64_t seed) {
    data.validate();
    if (data.task != Task::Classification) {
        throw ContractError("forest_train requires a classification dataset");
    }
    int pos = 0;
    for (double t : data.targets) pos += t == 1.0 ? 1 : 0;
    if (pos == 0 || pos == static_cast<int>(data.size())) {
        throw DegenerateDataError("forest training requires both classes");
    }
    if (config.trees < 1) throw ConfigError("forest requires >= 1 tree");

    RandomForest model;
    model.dims_ = data.dims();
    model.config_ = config;
    model.seed_ = seed;
    model.fingerprint_ = data.fingerprint();
    model.trees_.resize(config.trees);

    const int n = static_cast<int>(data.size());
    for (int t = 0; t < config.trees; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<int> idx(n);
        if (config.bootstrap) {
            for (int i = 0; i < n; ++i) {
                idx[i] = static_cast<int>(rng.below(n));
            }
        } else {
            std::iota(idx.begin(), idx.end(), 0);
        }
        TreeBuilder builder{data, config, rng, {}};
        builder.build(std::move(idx), 0);
        model.trees_[t] = std::move(builder.nodes);
    }
    return model;
}

std::pair<int, double> RandomForest::predict(std::span<const double> x) const {
    const double frac1 = score_positive(x);
    const int label = frac1 > 0.5 ? 1 : 0;
    return {label, std::max(frac1, 1.0 - frac1)};
}

double RandomForest::score_positive(std::span<const double> x) const {
    if (x.size() != dims_) {
        throw DimensionMismatchError("forest input dimension mismatch");
    }
    int votes = 0;
    for (const auto& tree : trees_) votes += tree_vote(tree, x);
    return static_cast<double>(votes) / static_cast<double>(trees_.size());
}

RandomForest RandomForest::from_parts(std::vector<std::vector<TreeNode>> trees,
                                      std::size_t dims, ForestConfig config,
                                      std::uint64_t seed,
                                      std::uint64_t fingerprint) {
    RandomForest m;
    m.trees_ = std::move(trees);
    m.dims_ = dims;
    m.config_ = config;
    m.seed_ = seed;
    m.fingerprint_ = fingerprint;
    return m;
}

double rbf_kernel(std::span<const double> a, std::span<const double> b,
                  double bandwidth) {
    if (a.size() != b.size()) {
        throw DimensionMismatchError("kernel input dimension mismatch");
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
    }
    return std::exp(-sq / (2.0 * bandwidth * bandwidth));
}

namespace {

// In-place lower Cholesky solve of A x = y for SPD A.
std::vector<double> cholesky_solve(std::vector<std::vector<double>> a,
                                   std::vector<double> y) {
    const std::size_t n = y.size();
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j][j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
        if (d <= 0.0) {
            throw DegenerateDataError("kernel matrix not positive definite");
        }
        a[j][j] = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
            a[i][j] = s / a[j][j];
        }
    }
    // forward substitution L z = y
    for (std::size_t i = 0; i < n; ++i) {
        double s = y[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i][k] * y[k];
        y[i] = s / a[i][i];
    }
    // back substitution L^T x = z
    for (std::size_t i = n; i-- > 0;) {
        double s = y[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[k][i] * y[k];
        y[i] = s / a[i][i];
    }
    return y;
}

}  // namespace

KernelRidge KernelRidge::fit(const Dataset& data, double bandwidth,
                             double ridge) {
    data.validate();
    if (data.size() == 0) throw DegenerateDataError("krr_fit on empty dataset");
    if (bandwidth <= 0.0) throw ConfigError("krr bandwidth must be positive");
    if (ridge <= 0.0) throw ConfigError("krr ridge must be positive");

    const std::size_t n = data.size();
    std::vector<std::vector<double>> k(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = rbf_kernel(data.inputs[i], data.inputs[j], bandwidth);
            k[i][j] = v;
            k[j][i] = v;
        }
        k[i][i] += ridge;
    }
    KernelRidge model;
    model.support_ = data.inputs;
    model.alpha_ = cholesky_solve(std::move(k), data.targets);
    model.bandwidth_ = bandwidth;
    model.ridge_ = ridge;
    return model;
}

double KernelRidge::raw_predict(std::span<const double> x) const {
    if (!trained()) throw ContractError("predict on untrained regressor");
    if (x.size() != support_[0].size()) {
        throw DimensionMismatchError("krr input dimension mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) {
        s += alpha_[i] * rbf_kernel(support_[i], x, bandwidth_);
    }
    return s;
}

double KernelRidge::predict(std::span<const double> x) const {
    return std::clamp(raw_predict(x), 0.0, 1.0);
}

KernelRidge KernelRidge::from_parts(std::vector<std::vector<double>> support,
                                    std::vector<double> alpha, double bandwidth,
                                    double ridge) {
    KernelRidge m;
    m.support_ = std::move(support);
    m.alpha_ = std::move(alpha);
    m.bandwidth_ = bandwidth;
    m.ridge_ = ridge;
    return m;
}

double cross_validate(const Dataset& data, int folds, const Trainer& trainer,
                      std::uint64_t seed) {
    data.validate();
    if (folds < 2) throw ConfigError("cross_validate requires folds >= 2");
    if (data.size() < static_cast<std::size_t>(folds)) {
        throw DegenerateDataError("fewer rows than folds");
    }

    // stratified round-robin dealing after a seeded per-class shuffle
    std::vector<int> fold_of(data.size());
    Rng rng(seed);
    std::vector<std::vector<int>> by_class(2);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int cls =
            data.task == Task::Classification && data.targets[i] == 1.0 ? 1 : 0;
        by_class[cls].push_back(static_cast<int>(i));
    }
    int cursor = 0;
    for (auto& group : by_class) {
        rng.shuffle(group);
        for (int i : group) fold_of[i] = (cursor++) % folds;
    }

    std::size_t correct = 0;
    for (int f = 0; f < folds; ++f) {
        Dataset train_set;
        train_set.task = data.task;
        std::vector<int> held;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (fold_of[i] == f) {
                held.push_back(static_cast<int>(i));
            } else {
                train_set.inputs.push_back(data.inputs[i]);
                train_set.targets.push_back(data.targets[i]);
            }
        }
        Predictor predict;
        try {
            predict = trainer(train_set, derive_seed(seed, f));
        } catch (const DegenerateDataError&) {
            // single-class training fold: fall back to majority vote
            int pos = 0;
            for (double t : train_set.targets) pos += t == 1.0 ? 1 : 0;
            const int majority = 2 * pos > static_cast<int>(train_set.size()) ? 1 : 0;
            predict = [majority](std::span<const double>) { return majority; };
        }
        for (int i : held) {
            if (predict(data.inputs[i]) == static_cast<int>(data.targets[i])) {
                ++correct;
            }
        }
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace lbpcg
