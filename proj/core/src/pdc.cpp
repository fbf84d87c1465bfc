#include "lbpcg/pdc.hpp"

#include <algorithm>
#include <cmath>

#include "lbpcg/rng.hpp"

namespace lbpcg {

const char* to_string(Decision d) {
    switch (d) {
        case Decision::Positive: return "positive";
        case Decision::Negative: return "negative";
        case Decision::Rejected: return "rejected";
    }
    return "unknown";
}

std::vector<ThresholdSubset> build_threshold_subsets(
    const std::vector<PdcExample>& examples,
    const AnnotatorReliability& reliability,
    const std::vector<double>& alpha_thresholds,
    const std::vector<double>& beta_thresholds) {
    auto check_sorted = [](const std::vector<double>& t) {
        if (t.empty()) throw ConfigError("threshold list must be non-empty");
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] < 0.0 || t[i] > 1.0) {
                throw ConfigError("thresholds must lie in [0,1]");
            }
            if (i > 0 && t[i] < t[i - 1]) {
                throw ConfigError("thresholds must be sorted ascending");
            }
        }
    };
    check_sorted(alpha_thresholds);
    check_sorted(beta_thresholds);

    std::vector<ThresholdSubset> subsets;
    subsets.reserve(alpha_thresholds.size() * beta_thresholds.size());
    for (double ta : alpha_thresholds) {
        for (double tb : beta_thresholds) {
            ThresholdSubset s;
            s.alpha_threshold = ta;
            s.beta_threshold = tb;
            for (std::size_t i = 0; i < examples.size(); ++i) {
                const int p = examples[i].player;
                if (p < 0 || p >= static_cast<int>(reliability.alpha.size())) {
                    throw ContractError("example references unknown player");
                }
                if (reliability.alpha[p] >= ta && reliability.beta[p] >= tb) {
                    s.example_idx.push_back(static_cast<int>(i));
                }
            }
            s.empty_flag = s.example_idx.empty();
            subsets.push_back(std::move(s));
        }
    }
    return subsets;
}

std::vector<double> encode_pdc_input(std::span<const double> playlog,
                                     const FeatureVector& features,
                                     const FeatureSchema& schema) {
    if (!valid_under(features, schema)) {
        throw ContractError("feature vector invalid under feature schema");
    }
    std::vector<double> x(playlog.begin(), playlog.end());
    for (std::size_t f = 0; f < schema.feature_count(); ++f) {
        for (int c = 0; c < schema.domain_size(f); ++c) {
            x.push_back(features.values[f] == c ? 1.0 : 0.0);
        }
    }
    return x;
}

PreferenceEnsemble train_ensemble(const std::vector<PdcExample>& examples,
                                  const std::vector<ThresholdSubset>& subsets,
                                  const FeatureSchema& feature_schema,
                                  const PdcTrainConfig& config,
                                  std::uint64_t seed) {
    if (subsets.empty()) throw ConfigError("no threshold subsets configured");
    if (examples.empty()) throw DegenerateDataError("no PDC examples");
    const std::size_t playlog_dims = examples[0].playlog.size();

    std::vector<std::vector<double>> encoded(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (examples[i].playlog.size() != playlog_dims) {
            throw DimensionMismatchError("play-logs have differing lengths");
        }
        encoded[i] =
            encode_pdc_input(examples[i].playlog, examples[i].features,
                             feature_schema);
    }

    PreferenceEnsemble ensemble;
    ensemble.confidence_threshold = config.confidence_threshold;
    ensemble.rejection_threshold = config.rejection_threshold;
    ensemble.playlog_dims = playlog_dims;
    ensemble.feature_schema = feature_schema;
    ensemble.members.resize(subsets.size());

    bool any_trained = false;
    for (std::size_t m = 0; m < subsets.size(); ++m) {
        EnsembleMember& member = ensemble.members[m];
        member.alpha_threshold = subsets[m].alpha_threshold;
        member.beta_threshold = subsets[m].beta_threshold;
        member.cv_accuracy = 0.0;

        Dataset data;
        data.task = Task::Classification;
        for (int i : subsets[m].example_idx) {
            data.inputs.push_back(encoded[i]);
            data.targets.push_back(examples[i].target);
        }
        int pos = 0;
        for (double t : data.targets) pos += t == 1.0 ? 1 : 0;
        const bool degenerate = data.size() < 2 || pos == 0 ||
                                pos == static_cast<int>(data.size()) ||
                                data.size() < static_cast<std::size_t>(config.folds);
        if (degenerate) continue;  // neutral member, u = 0

        const std::uint64_t member_seed = derive_seed(seed, m);
        const Trainer trainer = [&config](const Dataset& d, std::uint64_t s) {
            RandomForest model = RandomForest::train(d, config.forest, s);
            return Predictor([model = std::move(model)](std::span<const double> x) {
                return model.predict(x).first;
            });
        };
        member.cv_accuracy =
            cross_validate(data, config.folds, trainer, member_seed);
        member.model =
            RandomForest::train(data, config.forest, derive_seed(member_seed, 1));
        any_trained = true;
    }
    if (!any_trained) {
        throw DegenerateDataError("all PDC threshold subsets are degenerate");
    }

    // softmax over cross-validation accuracies
    double max_u = 0.0;
    for (const auto& m : ensemble.members) max_u = std::max(max_u, m.cv_accuracy);
    double z = 0.0;
    for (const auto& m : ensemble.members) z += std::exp(m.cv_accuracy - max_u);
    for (auto& m : ensemble.members) {
        m.weight = std::exp(m.cv_accuracy - max_u) / z;
    }
    return ensemble;
}

std::pair<Decision, double> predict_preference(const PreferenceEnsemble& ensemble,
                                               std::span<const double> playlog,
                                               const FeatureVector& features) {
    if (playlog.size() != ensemble.playlog_dims) {
        throw DimensionMismatchError("play-log dimension mismatch");
    }
    const auto x = encode_pdc_input(playlog, features, ensemble.feature_schema);
    double score = 0.0;
    for (const auto& m : ensemble.members) {
        score += m.weight * (m.model ? m.model->score_positive(x) : 0.5);
    }
    const double band = ensemble.rejection_threshold * 0.5;
    Decision decision;
    if (std::abs(score - ensemble.confidence_threshold) < band) {
        decision = Decision::Rejected;
    } else if (score >= ensemble.confidence_threshold) {
        decision = Decision::Positive;
    } else {
        decision = Decision::Negative;
    }
    return {decision, score};
}

namespace {

SweepRow error_row(const std::vector<int>& truth,
                   const std::vector<Decision>& decisions, double threshold) {
    int pos_total = 0, pos_wrong = 0, neg_total = 0, neg_wrong = 0, rejected = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (decisions[i] == Decision::Rejected) {
            ++rejected;
            continue;
        }
        const int predicted = decisions[i] == Decision::Positive ? 1 : 0;
        if (truth[i] == 1) {
            ++pos_total;
            if (predicted != 1) ++pos_wrong;
        } else {
            ++neg_total;
            if (predicted != 0) ++neg_wrong;
        }
    }
    SweepRow row;
    row.threshold = threshold;
    row.pos_error = pos_total ? static_cast<double>(pos_wrong) / pos_total : 0.0;
    row.neg_error = neg_total ? static_cast<double>(neg_wrong) / neg_total : 0.0;
    row.hter = 0.5 * (row.pos_error + row.neg_error);
    row.reject_rate = truth.empty()
                          ? 0.0
                          : static_cast<double>(rejected) / truth.size();
    return row;
}

}  // namespace

std::vector<SweepRow> rejection_sweep(const PreferenceEnsemble& ensemble,
                                      const std::vector<PdcExample>& examples,
                                      const std::vector<double>& thresholds) {
    std::vector<SweepRow> rows;
    for (double tr : thresholds) {
        PreferenceEnsemble e = ensemble;
        e.rejection_threshold = tr;
        std::vector<int> truth;
        std::vector<Decision> decisions;
        for (const auto& ex : examples) {
            truth.push_back(ex.target);
            decisions.push_back(
                predict_preference(e, ex.playlog, ex.features).first);
        }
        rows.push_back(error_row(truth, decisions, tr));
    }
    return rows;
}

std::vector<SweepRow> confidence_sweep(const PreferenceEnsemble& ensemble,
                                       const std::vector<PdcExample>& examples,
                                       const std::vector<double>& thresholds) {
    std::vector<SweepRow> rows;
    for (double tc : thresholds) {
        PreferenceEnsemble e = ensemble;
        e.confidence_threshold = tc;
        e.rejection_threshold = 0.0;
        std::vector<int> truth;
        std::vector<Decision> decisions;
        for (const auto& ex : examples) {
            truth.push_back(ex.target);
            decisions.push_back(
                predict_preference(e, ex.playlog, ex.features).first);
        }
        rows.push_back(error_row(truth, decisions, tc));
    }
    return rows;
}

}  // namespace lbpcg
