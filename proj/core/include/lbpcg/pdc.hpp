#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lbpcg/content.hpp"
#include "lbpcg/gpe.hpp"
#include "lbpcg/learners.hpp"

namespace lbpcg {

// One training pair [(play-log, category features), feedback] with the
// contributing player's id for reliability filtering.
struct PdcExample {
    std::vector<double> playlog;
    FeatureVector features;
    int target = 0;  // y in {0,1}
    int player = 0;
};

struct ThresholdSubset {
    double alpha_threshold = 0.0;
    double beta_threshold = 0.0;
    std::vector<int> example_idx;
    bool empty_flag = false;
};

// One subset per (t_alpha, t_beta) grid pair; an example survives when its
// player satisfies alpha >= t_alpha AND beta >= t_beta.
std::vector<ThresholdSubset> build_threshold_subsets(
    const std::vector<PdcExample>& examples,
    const AnnotatorReliability& reliability,
    const std::vector<double>& alpha_thresholds,
    const std::vector<double>& beta_thresholds);

struct EnsembleMember {
    std::optional<RandomForest> model;  // nullopt = constant-0.5 scorer
    double cv_accuracy = 0.0;
    double weight = 0.0;
    double alpha_threshold = 0.0;
    double beta_threshold = 0.0;
};

enum class Decision { Positive, Negative, Rejected };
const char* to_string(Decision d);

struct PreferenceEnsemble {
    std::vector<EnsembleMember> members;
    double confidence_threshold = 0.61;
    double rejection_threshold = 0.25;
    std::size_t playlog_dims = 0;
    FeatureSchema feature_schema;
};

// Play-log concatenated with a one-hot encoding of the category features.
std::vector<double> encode_pdc_input(std::span<const double> playlog,
                                     const FeatureVector& features,
                                     const FeatureSchema& schema);

struct PdcTrainConfig {
    ForestConfig forest{};
    int folds = 5;
    double confidence_threshold = 0.61;
    double rejection_threshold = 0.25;
};

// Trains one member per subset (cross-validated accuracy u_m as weight input,
// weights = softmax(u)); degenerate subsets become neutral 0.5 scorers with
// u = 0 so M matches the configured grid.
PreferenceEnsemble train_ensemble(const std::vector<PdcExample>& examples,
                                  const std::vector<ThresholdSubset>& subsets,
                                  const FeatureSchema& feature_schema,
                                  const PdcTrainConfig& config,
                                  std::uint64_t seed);

// Weighted ensemble score s; Rejected when |s - theta_c| < theta_r * 0.5,
// otherwise Positive iff s >= theta_c.
std::pair<Decision, double> predict_preference(const PreferenceEnsemble& ensemble,
                                               std::span<const double> playlog,
                                               const FeatureVector& features);

struct SweepRow {
    double threshold = 0.0;
    double pos_error = 0.0;
    double neg_error = 0.0;
    double hter = 0.0;
    double reject_rate = 0.0;
};

// Error rates on labeled examples as the rejection threshold varies; HTER is
// computed over retained (non-rejected) examples only.
std::vector<SweepRow> rejection_sweep(const PreferenceEnsemble& ensemble,
                                      const std::vector<PdcExample>& examples,
                                      const std::vector<double>& thresholds);

// Error rates as the confidence threshold varies with rejection disabled.
std::vector<SweepRow> confidence_sweep(const PreferenceEnsemble& ensemble,
                                       const std::vector<PdcExample>& examples,
                                       const std::vector<double>& thresholds);

}  // namespace lbpcg
