#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lbpcg/gpe.hpp"
#include "lbpcg/rng.hpp"
#include "lbpcg/simworld.hpp"

using namespace lbpcg;

namespace {

ContentSchema tiny_schema() {
    return ContentSchema({{"a", 3}, {"b", 3}});
}

SurveyMatrix tiny_surveys() {
    SurveyMatrix s;
    s.games = {ContentVector{{0, 0}}, ContentVector{{1, 2}},
               ContentVector{{2, 1}}};
    s.player_count = 2;
    s.entries = {{0, 0, 1, 4}, {0, 1, 1, 3}, {1, 0, 0, 1},
                 {1, 1, 1, 3}, {2, 1, 0, 0}};
    return s;
}

}  // namespace

TEST_CASE("e_step equals the two-coin Bayes posterior") {
    const SurveyMatrix s = tiny_surveys();
    AnnotatorReliability r;
    r.alpha = {0.9, 0.6};
    r.beta = {0.8, 0.7};
    const std::vector<double> h = {0.5, 0.3, 0.9};

    const ConsensusEstimate c = e_step(s, r, h);
    REQUIRE(c.gamma.size() == 3);

    for (int n = 0; n < 3; ++n) {
        double a = 1.0, b = 1.0;
        for (const auto& e : s.entries) {
            if (e.game != n) continue;
            a *= e.label ? r.alpha[e.player] : 1.0 - r.alpha[e.player];
            b *= e.label ? 1.0 - r.beta[e.player] : r.beta[e.player];
        }
        const double expected = a * h[n] / (a * h[n] + b * (1.0 - h[n]));
        CHECK(c.gamma[n] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("an unrated game keeps exactly its prior") {
    SurveyMatrix s = tiny_surveys();
    s.entries.erase(s.entries.begin() + 4);  // game 2 now unrated
    AnnotatorReliability r;
    r.alpha = {0.9, 0.6};
    r.beta = {0.8, 0.7};
    const std::vector<double> h = {0.5, 0.3, 0.9};
    const ConsensusEstimate c = e_step(s, r, h);
    CHECK(c.gamma[2] == doctest::Approx(0.9));
    CHECK_FALSE(c.degenerate[2]);
}

TEST_CASE("a zero posterior denominator falls back to the prior, flagged") {
    // prior 0 kills the positive branch; a perfectly specific player who
    // labeled the game positive kills the negative branch
    SurveyMatrix s;
    s.games = {ContentVector{{0, 0}}};
    s.player_count = 1;
    s.entries = {{0, 0, 1, 4}};
    AnnotatorReliability r;
    r.alpha = {0.9};
    r.beta = {1.0};
    const std::vector<double> h = {0.0};
    const ConsensusEstimate c = e_step(s, r, h);
    CHECK(c.gamma[0] == doctest::Approx(0.0));
    CHECK(c.degenerate[0]);
}

TEST_CASE("m_step matches direct recomputation and keeps previous on 0/0") {
    const SurveyMatrix s = tiny_surveys();
    ConsensusEstimate c;
    c.gamma = {0.9, 0.2, 0.6};

    AnnotatorReliability previous;
    previous.alpha = {0.5, 0.5};
    previous.beta = {0.5, 0.5};
    const AnnotatorReliability r = m_step(s, c, previous);

    for (int p = 0; p < 2; ++p) {
        double num_a = 0.0, den_a = 0.0, num_b = 0.0, den_b = 0.0;
        for (const auto& e : s.entries) {
            if (e.player != p) continue;
            num_a += c.gamma[e.game] * e.label;
            den_a += c.gamma[e.game];
            num_b += (1.0 - c.gamma[e.game]) * (1 - e.label);
            den_b += 1.0 - c.gamma[e.game];
        }
        CHECK(r.alpha[p] == doctest::Approx(num_a / den_a).epsilon(1e-12));
        CHECK(r.beta[p] == doctest::Approx(num_b / den_b).epsilon(1e-12));
    }

    // a player with gamma exactly 1 on all their games has no negative mass
    SurveyMatrix lone;
    lone.games = {ContentVector{{0, 0}}};
    lone.player_count = 1;
    lone.entries = {{0, 0, 1, 4}};
    ConsensusEstimate sure;
    sure.gamma = {1.0};
    AnnotatorReliability prev;
    prev.alpha = {0.42};
    prev.beta = {0.37};
    const AnnotatorReliability kept = m_step(lone, sure, prev);
    CHECK(kept.beta[0] == doctest::Approx(0.37));  // 0/0 keeps previous
}

TEST_CASE("log-likelihood matches a direct evaluation") {
    const SurveyMatrix s = tiny_surveys();
    AnnotatorReliability r;
    r.alpha = {0.9, 0.6};
    r.beta = {0.8, 0.7};
    const std::vector<double> h = {0.5, 0.3, 0.9};

    double expected = 0.0;
    for (int n = 0; n < 3; ++n) {
        double a = 1.0, b = 1.0;
        for (const auto& e : s.entries) {
            if (e.game != n) continue;
            a *= e.label ? r.alpha[e.player] : 1.0 - r.alpha[e.player];
            b *= e.label ? 1.0 - r.beta[e.player] : r.beta[e.player];
        }
        expected += std::log(a * h[n] + b * (1.0 - h[n]));
    }
    CHECK(log_likelihood(s, r, h) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("crowd_em recovers planted reliabilities on a shared-truth cohort") {
    const ContentSchema schema = ContentSchema::default_schema();
    const FeatureSchema features = FeatureSchema::default_difficulty();
    const WorldModel world(schema, features, {});

    // 40 games with a planted binary truth, 12 players of known reliability,
    // everyone rates everything twice
    Rng rng(41);
    SurveyMatrix surveys;
    std::vector<int> truth;
    for (int i = 0; i < 40; ++i) {
        ContentVector g;
        for (std::size_t d = 0; d < schema.dim_count(); ++d) {
            g.values.push_back(static_cast<int>(rng.below(schema.cardinality(d))));
        }
        surveys.games.push_back(std::move(g));
        truth.push_back(i % 2);
    }
    surveys.player_count = 12;
    std::vector<double> alpha_star, beta_star;
    for (int p = 0; p < 12; ++p) {
        alpha_star.push_back(rng.uniform(0.65, 0.95));
        beta_star.push_back(rng.uniform(0.65, 0.95));
        for (int rep = 0; rep < 2; ++rep) {
            for (int n = 0; n < 40; ++n) {
                int label;
                if (truth[n]) {
                    label = rng.uniform() < alpha_star[p] ? 1 : 0;
                } else {
                    label = rng.uniform() < beta_star[p] ? 0 : 1;
                }
                surveys.entries.push_back({n, p, label, 2});
            }
        }
    }

    const CrowdEmResult em = crowd_em(surveys, schema, CrowdEmConfig{}, 5);
    int alpha_ok = 0, beta_ok = 0, sign_ok = 0;
    for (int p = 0; p < 12; ++p) {
        alpha_ok += std::abs(em.reliability.alpha[p] - alpha_star[p]) <= 0.12;
        beta_ok += std::abs(em.reliability.beta[p] - beta_star[p]) <= 0.12;
    }
    for (int n = 0; n < 40; ++n) {
        sign_ok += (em.consensus.gamma[n] >= 0.5) == (truth[n] == 1);
    }
    CHECK(alpha_ok >= 11);
    CHECK(beta_ok >= 11);
    CHECK(sign_ok >= 38);

    // epoch log is recorded and the final regressor predicts in [0,1]
    CHECK_FALSE(em.epoch_log_likelihood.empty());
    for (const auto& g : surveys.games) {
        const double gamma = predict_popularity(em.regressor, g, schema);
        CHECK(gamma >= 0.0);
        CHECK(gamma <= 1.0);
    }
}

TEST_CASE("with the regressor frozen the likelihood never decreases") {
    SurveyMatrix s = tiny_surveys();
    // enlarge a little so EM has something to do
    Rng rng(43);
    for (int extra = 0; extra < 30; ++extra) {
        s.entries.push_back({static_cast<int>(rng.below(3)),
                             static_cast<int>(rng.below(2)),
                             static_cast<int>(rng.below(2)), 2});
    }
    CrowdEmConfig config;
    config.refit_regressor = false;
    config.tol = 0.0;
    config.max_epochs = 20;
    const CrowdEmResult em = crowd_em(s, tiny_schema(), config, 7);
    for (std::size_t e = 1; e < em.epoch_log_likelihood.size(); ++e) {
        CHECK(em.epoch_log_likelihood[e] >=
              em.epoch_log_likelihood[e - 1] - 1e-9);
    }
}

TEST_CASE("survey validation catches inconsistent indices") {
    SurveyMatrix s = tiny_surveys();
    CHECK_NOTHROW(s.validate());
    s.entries.push_back({7, 0, 1, 2});  // game out of range
    CHECK_THROWS_AS(s.validate(), Error);
}
