#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lbpcg/content.hpp"
#include "lbpcg/icq.hpp"
#include "lbpcg/learners.hpp"

namespace lbpcg {

// One-vs-rest multi-class model for a single content feature.
struct CategoryModel {
    int feature_id = 0;
    double rejection_threshold = 0.0;
    std::vector<RandomForest> one_vs_rest;  // one per category value

    friend bool operator==(const CategoryModel&, const CategoryModel&) = default;
};

struct CcAnnotation {
    ContentVector game;
    FeatureVector features;
};

struct CcConfig {
    int stop_window = 10;  // stop when no validation improvement this long
    int max_iters = 200;
    int init_budget_per_category = 10;
    double rejection_threshold = 0.0;
    ForestConfig forest{};
};

using FeatureOracle = std::function<FeatureVector(const ContentVector&)>;

struct CcResult {
    std::vector<CategoryModel> models;        // one per feature
    std::vector<LearningCurve> curves;        // per feature; errors are overall
    std::vector<CcAnnotation> annotations;    // all annotations incl. reused
    std::vector<std::vector<double>> final_per_category_error;  // [feature][cat]
};

// Per-feature active learning with one-vs-rest learners and early stopping at
// the windowed argmin of overall validation error. A game annotated once
// serves all features; `reused` annotations are consumed without new oracle
// calls.
CcResult active_learn_cc(const ContentSubspace& pool,
                         const FeatureOracle& annotator,
                         const ValidationSet& validation,
                         const std::vector<CcAnnotation>& reused,
                         const FeatureSchema& feature_schema,
                         const CcConfig& config, std::uint64_t seed);

// Winner-take-all over per-category positive scores; ties -> lowest index.
std::pair<int, double> categorize(const CategoryModel& model,
                                  const ContentVector& g,
                                  const ContentSchema& schema);

// Keeps games with winning confidence >= threshold; records category and
// confidence per kept game; tagged ConfidentAcceptable (G_ac).
ContentSubspace filter_confident(const ContentSubspace& space,
                                 const CategoryModel& model, double threshold);

}  // namespace lbpcg
