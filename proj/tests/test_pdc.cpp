#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "lbpcg/pdc.hpp"
#include "lbpcg/rng.hpp"

using namespace lbpcg;

namespace {

FeatureSchema two_features() {
    FeatureSchema s;
    s.features = {{"band", {"a", "b", "c"}}, {"mode", {"x", "y"}}};
    return s;
}

// target is a simple function of the first play-log coordinate
std::vector<PdcExample> toy_examples(int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<PdcExample> out;
    for (int i = 0; i < n; ++i) {
        PdcExample e;
        e.player = i % 6;
        e.playlog = {rng.uniform(), rng.uniform(), rng.uniform()};
        e.features.values = {static_cast<int>(rng.below(3)),
                             static_cast<int>(rng.below(2))};
        e.target = e.playlog[0] > 0.5 ? 1 : 0;
        out.push_back(std::move(e));
    }
    return out;
}

AnnotatorReliability six_players() {
    AnnotatorReliability r;
    r.alpha = {0.95, 0.80, 0.65, 0.95, 0.50, 0.85};
    r.beta = {0.90, 0.95, 0.70, 0.55, 0.60, 0.85};
    return r;
}

}  // namespace

TEST_CASE("threshold subsets keep exactly the qualifying players and nest") {
    const auto examples = toy_examples(60, 3);
    const auto reliability = six_players();
    const std::vector<double> grid = {0.0, 0.6, 0.9};
    const auto subsets = build_threshold_subsets(examples, reliability, grid, grid);
    REQUIRE(subsets.size() == 9);

    for (const auto& s : subsets) {
        std::set<int> kept(s.example_idx.begin(), s.example_idx.end());
        for (std::size_t i = 0; i < examples.size(); ++i) {
            const int p = examples[i].player;
            const bool qualifies = reliability.alpha[p] >= s.alpha_threshold &&
                                   reliability.beta[p] >= s.beta_threshold;
            CHECK(kept.count(static_cast<int>(i)) == (qualifies ? 1u : 0u));
        }
        CHECK(s.empty_flag == s.example_idx.empty());
    }

    // tightening either threshold can only shrink the subset
    auto at = [&](int ia, int ib) -> const ThresholdSubset& {
        return subsets[ia * 3 + ib];
    };
    for (int ia = 0; ia < 3; ++ia) {
        for (int ib = 0; ib < 3; ++ib) {
            if (ia > 0) {
                CHECK(at(ia, ib).example_idx.size() <=
                      at(ia - 1, ib).example_idx.size());
            }
            if (ib > 0) {
                CHECK(at(ia, ib).example_idx.size() <=
                      at(ia, ib - 1).example_idx.size());
            }
        }
    }

    // the loosest subset keeps everything
    CHECK(at(0, 0).example_idx.size() == examples.size());
}

TEST_CASE("malformed threshold grids are configuration errors") {
    const auto examples = toy_examples(10, 5);
    const auto reliability = six_players();
    CHECK_THROWS_AS(build_threshold_subsets(examples, reliability, {0.6, 0.3},
                                            {0.0}),
                    ConfigError);
    CHECK_THROWS_AS(build_threshold_subsets(examples, reliability, {0.0},
                                            {-0.1, 0.5}),
                    ConfigError);
    CHECK_THROWS_AS(build_threshold_subsets(examples, reliability, {}, {0.0}),
                    ConfigError);
    CHECK_THROWS_AS(build_threshold_subsets(examples, reliability, {0.0},
                                            {0.5, 1.2}),
                    ConfigError);
}

TEST_CASE("encoded input is the play-log followed by one-hot features") {
    const FeatureSchema schema = two_features();
    const std::vector<double> playlog = {0.1, 0.7};
    FeatureVector fv;
    fv.values = {2, 0};
    const auto x = encode_pdc_input(playlog, fv, schema);
    const std::vector<double> expected = {0.1, 0.7, 0.0, 0.0, 1.0, 1.0, 0.0};
    CHECK(x == expected);

    FeatureVector bad;
    bad.values = {3, 0};  // out of domain
    CHECK_THROWS_AS(encode_pdc_input(playlog, bad, schema), ContractError);
}

TEST_CASE("decision semantics around the confidence and rejection thresholds") {
    // a hand-built ensemble of neutral members scores exactly 0.5 everywhere
    PreferenceEnsemble ensemble;
    ensemble.feature_schema = two_features();
    ensemble.playlog_dims = 2;
    ensemble.confidence_threshold = 0.61;
    ensemble.rejection_threshold = 0.25;
    EnsembleMember neutral;
    neutral.weight = 0.5;
    ensemble.members = {neutral, neutral};

    const std::vector<double> playlog = {0.2, 0.9};
    FeatureVector fv;
    fv.values = {1, 1};

    // |0.5 - 0.61| = 0.11 < 0.125: inside the rejection band
    auto [decision, score] = predict_preference(ensemble, playlog, fv);
    CHECK(score == doctest::Approx(0.5));
    CHECK(decision == Decision::Rejected);

    // with rejection disabled the same score is a plain negative
    ensemble.rejection_threshold = 0.0;
    CHECK(predict_preference(ensemble, playlog, fv).first ==
          Decision::Negative);

    // lowering the confidence threshold below the score flips it positive
    ensemble.confidence_threshold = 0.5;
    CHECK(predict_preference(ensemble, playlog, fv).first ==
          Decision::Positive);

    // dimension mismatch is caught before any scoring
    CHECK_THROWS_AS(
        predict_preference(ensemble, std::vector<double>{0.2}, fv),
        DimensionMismatchError);
}

TEST_CASE("trained ensemble: weights form a softmax and scores are convex") {
    const auto examples = toy_examples(120, 7);
    const auto reliability = six_players();
    const auto subsets = build_threshold_subsets(examples, reliability,
                                                 {0.0, 0.6}, {0.0, 0.6});
    PdcTrainConfig config;
    config.forest.trees = 20;
    config.folds = 3;
    const PreferenceEnsemble ensemble =
        train_ensemble(examples, subsets, two_features(), config, 11);
    REQUIRE(ensemble.members.size() == 4);

    double total = 0.0;
    for (const auto& m : ensemble.members) {
        CHECK(m.weight > 0.0);
        total += m.weight;
    }
    CHECK(total == doctest::Approx(1.0));

    // softmax oracle from the recorded cross-validation accuracies
    double z = 0.0;
    for (const auto& m : ensemble.members) z += std::exp(m.cv_accuracy);
    for (const auto& m : ensemble.members) {
        CHECK(m.weight == doctest::Approx(std::exp(m.cv_accuracy) / z));
    }

    // the ensemble score is a convex combination of member scores, so it
    // stays within the members' range; it also learned the planted rule
    int correct = 0;
    for (const auto& e : examples) {
        const auto [decision, score] =
            predict_preference(ensemble, e.playlog, e.features);
        CHECK(score >= 0.0);
        CHECK(score <= 1.0);
        if (decision != Decision::Rejected) {
            correct += (decision == Decision::Positive) == (e.target == 1);
        }
    }
    CHECK(correct > 60);
}

TEST_CASE("degenerate subsets become neutral members, all-empty is an error") {
    auto examples = toy_examples(40, 13);
    const auto reliability = six_players();
    // nobody reaches alpha >= 0.99, so the tight subset is empty
    const auto subsets = build_threshold_subsets(examples, reliability,
                                                 {0.0, 0.99}, {0.0});
    PdcTrainConfig config;
    config.forest.trees = 10;
    config.folds = 3;
    const PreferenceEnsemble ensemble =
        train_ensemble(examples, subsets, two_features(), config, 17);
    REQUIRE(ensemble.members.size() == 2);
    CHECK(ensemble.members[0].model.has_value());
    CHECK_FALSE(ensemble.members[1].model.has_value());
    CHECK(ensemble.members[1].cv_accuracy == 0.0);

    // single-class examples leave every subset degenerate
    for (auto& e : examples) e.target = 1;
    const auto flat_subsets = build_threshold_subsets(examples, reliability,
                                                      {0.0}, {0.0});
    CHECK_THROWS_AS(
        train_ensemble(examples, flat_subsets, two_features(), config, 19),
        DegenerateDataError);
}

TEST_CASE("rejection sweep matches a direct recomputation at each threshold") {
    const auto examples = toy_examples(80, 23);
    const auto reliability = six_players();
    const auto subsets =
        build_threshold_subsets(examples, reliability, {0.0}, {0.0});
    PdcTrainConfig config;
    config.forest.trees = 15;
    config.folds = 3;
    const PreferenceEnsemble ensemble =
        train_ensemble(examples, subsets, two_features(), config, 29);

    const std::vector<double> thresholds = {0.0, 0.2, 0.5};
    const auto rows = rejection_sweep(ensemble, examples, thresholds);
    REQUIRE(rows.size() == 3);

    for (std::size_t r = 0; r < rows.size(); ++r) {
        PreferenceEnsemble e = ensemble;
        e.rejection_threshold = thresholds[r];
        int pos_total = 0, pos_wrong = 0, neg_total = 0, neg_wrong = 0,
            rejected = 0;
        for (const auto& ex : examples) {
            const auto decision =
                predict_preference(e, ex.playlog, ex.features).first;
            if (decision == Decision::Rejected) {
                ++rejected;
                continue;
            }
            const int predicted = decision == Decision::Positive ? 1 : 0;
            if (ex.target == 1) {
                ++pos_total;
                pos_wrong += predicted != 1;
            } else {
                ++neg_total;
                neg_wrong += predicted != 0;
            }
        }
        CHECK(rows[r].pos_error ==
              doctest::Approx(pos_total ? double(pos_wrong) / pos_total : 0.0));
        CHECK(rows[r].neg_error ==
              doctest::Approx(neg_total ? double(neg_wrong) / neg_total : 0.0));
        CHECK(rows[r].hter ==
              doctest::Approx(0.5 * (rows[r].pos_error + rows[r].neg_error)));
        CHECK(rows[r].reject_rate ==
              doctest::Approx(double(rejected) / examples.size()));
    }
    // at threshold zero nothing can be rejected
    CHECK(rows[0].reject_rate == doctest::Approx(0.0));

    // confidence sweep rows never reject either
    const auto conf_rows = confidence_sweep(ensemble, examples, {0.3, 0.61});
    for (const auto& row : conf_rows) {
        CHECK(row.reject_rate == doctest::Approx(0.0));
    }
}
