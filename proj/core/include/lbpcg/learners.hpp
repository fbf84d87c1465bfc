#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "lbpcg/errors.hpp"

namespace lbpcg {

enum class Task { Classification, Regression };

// Row-major training set. Classification targets are {0,1}; regression
// targets live in [0,1].
struct Dataset {
    std::vector<std::vector<double>> inputs;
    std::vector<double> targets;
    Task task = Task::Classification;

    std::size_t size() const { return inputs.size(); }
    std::size_t dims() const { return inputs.empty() ? 0 : inputs[0].size(); }
    void validate() const;
    std::uint64_t fingerprint() const;
};

struct ForestConfig {
    int trees = 100;
    int max_depth = 12;
    int min_leaf = 1;
    int features_per_split = 0;  // 0 = round(sqrt(D))
    bool bootstrap = true;

    friend bool operator==(const ForestConfig&, const ForestConfig&) = default;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = 0;
    double prob_positive = 0.5;

    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// From-scratch random forest: Gini splits on bootstrap samples, per-tree
// derived seeds so training is a pure function of (data, config, seed).
class RandomForest {
public:
    RandomForest() = default;

    static RandomForest train(const Dataset& data, const ForestConfig& config,
                              std::uint64_t seed);

    // Returns (label in {0,1}, confidence = fraction of trees voting label).
    std::pair<int, double> predict(std::span<const double> x) const;

    // Fraction of trees voting the positive class; used for ranking/scoring.
    double score_positive(std::span<const double> x) const;

    std::size_t dims() const { return dims_; }
    std::size_t tree_count() const { return trees_.size(); }
    const std::vector<std::vector<TreeNode>>& trees() const { return trees_; }
    const ForestConfig& config() const { return config_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t data_fingerprint() const { return fingerprint_; }

    friend bool operator==(const RandomForest&, const RandomForest&) = default;

    // serialization support
    static RandomForest from_parts(std::vector<std::vector<TreeNode>> trees,
                                   std::size_t dims, ForestConfig config,
                                   std::uint64_t seed, std::uint64_t fingerprint);

private:
    std::vector<std::vector<TreeNode>> trees_;
    std::size_t dims_ = 0;
    ForestConfig config_;
    std::uint64_t seed_ = 0;
    std::uint64_t fingerprint_ = 0;
};

// RBF-kernel ridge regressor: solves (K + ridge*I) alpha = y by Cholesky.
// Predictions are clamped to [0,1].
class KernelRidge {
public:
    KernelRidge() = default;

    static KernelRidge fit(const Dataset& data, double bandwidth, double ridge);

    double predict(std::span<const double> x) const;      // clamped
    double raw_predict(std::span<const double> x) const;  // unclamped

    const std::vector<std::vector<double>>& support() const { return support_; }
    const std::vector<double>& coefficients() const { return alpha_; }
    double bandwidth() const { return bandwidth_; }
    double ridge() const { return ridge_; }
    bool trained() const { return !support_.empty(); }

    friend bool operator==(const KernelRidge&, const KernelRidge&) = default;

    static KernelRidge from_parts(std::vector<std::vector<double>> support,
                                  std::vector<double> alpha, double bandwidth,
                                  double ridge);

private:
    std::vector<std::vector<double>> support_;
    std::vector<double> alpha_;
    double bandwidth_ = 0.0;
    double ridge_ = 0.0;
};

double rbf_kernel(std::span<const double> a, std::span<const double> b,
                  double bandwidth);

using Predictor = std::function<int(std::span<const double>)>;
using Trainer = std::function<Predictor(const Dataset&, std::uint64_t)>;

// Stratified k-fold cross-validation accuracy. Fold assignment is
// deterministic under seed; returns pooled held-out accuracy.
double cross_validate(const Dataset& data, int folds, const Trainer& trainer,
                      std::uint64_t seed);

}  // namespace lbpcg
