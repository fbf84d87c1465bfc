#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "lbpcg/content.hpp"
#include "lbpcg/learners.hpp"

namespace lbpcg {

enum class ValidationRole { T_ICQ, T_CC };

struct ValidationEntry {
    ContentVector game;
    int acceptability = 0;                 // +1 / -1 (T_ICQ)
    std::optional<FeatureVector> features;  // present for T_CC entries
};

struct ValidationSet {
    ValidationRole role = ValidationRole::T_ICQ;
    std::vector<ValidationEntry> entries;
};

struct ErrorRates {
    double positive = 0.0;  // fraction of true positives misclassified
    double negative = 0.0;  // fraction of true negatives misclassified
    double hter = 0.0;      // mean of the two
};

struct CurvePoint {
    int iteration = 0;
    double pos_error = 0.0;
    double neg_error = 0.0;
    double hter = 0.0;
    long queried = -1;  // pool index queried this iteration, -1 if none
    bool new_annotation = false;
};

struct LearningCurve {
    std::vector<CurvePoint> points;

    void write_csv(const std::filesystem::path& path) const;
};

ErrorRates evaluate_errors(const RandomForest& classifier,
                           const ValidationSet& validation,
                           const ContentSchema& schema);

enum class QueryPolicy { LeastConfidence, Random };

struct IcqConfig {
    double stop_hter = 0.20;
    double balance_band = 0.05;  // required |+Error - -Error| at stop
    int max_iters = 150;
    int init_retries = 20;
    QueryPolicy policy = QueryPolicy::LeastConfidence;
    ForestConfig forest{};
};

using AcceptabilityOracle = std::function<int(const ContentVector&)>;

struct IcqResult {
    RandomForest classifier;
    LearningCurve curve;
    std::vector<LabeledGame> annotations;  // every developer annotation made
};

// Uncertainty-sampling active learning of the acceptability classifier.
// Pool games appearing in the validation set are never queried; no game is
// annotated twice. Deterministic under (pool, oracle, config, seed).
IcqResult active_learn_icq(const ContentSubspace& pool,
                           const AcceptabilityOracle& annotator,
                           const ValidationSet& validation,
                           const IcqConfig& config, std::uint64_t seed);

// Members of `space` predicted +1, tagged Acceptable. Emits a warning on
// stderr when the result is empty.
ContentSubspace filter_acceptable(const ContentSubspace& space,
                                  const RandomForest& classifier);

}  // namespace lbpcg
