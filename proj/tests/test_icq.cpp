#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "lbpcg/icq.hpp"
#include "lbpcg/rng.hpp"

using namespace lbpcg;

namespace {

ContentSchema test_schema() {
    std::vector<ParamDescriptor> dims;
    for (int i = 0; i < 5; ++i) dims.push_back({"d" + std::to_string(i), 6});
    return ContentSchema(std::move(dims));
}

// linear-threshold acceptability with a comfortable margin
struct LinearWorld {
    ContentSchema schema = test_schema();
    std::vector<double> w = {0.9, -0.7, 0.5, 0.8, -0.6};

    int label(const ContentVector& g) const {
        const auto x = normalize(g, schema);
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
        return s >= 0.45 ? 1 : -1;
    }
};

std::vector<ContentVector> distinct_games(const ContentSchema& schema, int n,
                                          std::uint64_t seed) {
    Rng rng(seed);
    std::set<ContentVector> seen;
    std::vector<ContentVector> out;
    while (static_cast<int>(out.size()) < n) {
        ContentVector g;
        for (std::size_t d = 0; d < schema.dim_count(); ++d) {
            g.values.push_back(static_cast<int>(rng.below(schema.cardinality(d))));
        }
        if (seen.insert(g).second) out.push_back(std::move(g));
    }
    return out;
}

struct Setup {
    LinearWorld world;
    ContentSubspace pool;
    ValidationSet validation;
};

Setup make_setup(std::uint64_t seed) {
    Setup s;
    const auto games = distinct_games(s.world.schema, 360, seed);
    s.pool.schema = s.world.schema;
    s.pool.tag = SubspaceTag::Reduced;
    s.pool.members.assign(games.begin(), games.begin() + 300);
    s.validation.role = ValidationRole::T_ICQ;
    for (int i = 300; i < 360; ++i) {
        s.validation.entries.push_back({games[i], s.world.label(games[i]), {}});
    }
    return s;
}

IcqConfig fast_config() {
    IcqConfig c;
    c.stop_hter = 0.15;
    c.balance_band = 0.5;
    c.max_iters = 120;
    c.init_retries = 50;
    c.forest.trees = 25;
    return c;
}

}  // namespace

TEST_CASE("active learning reaches the stop criterion and tracks annotations") {
    const Setup s = make_setup(3);
    const AcceptabilityOracle oracle = [&](const ContentVector& g) {
        return s.world.label(g);
    };
    const IcqResult result =
        active_learn_icq(s.pool, oracle, s.validation, fast_config(), 17);

    const ErrorRates final =
        evaluate_errors(result.classifier, s.validation, s.world.schema);
    CHECK(final.hter <= 0.15);

    // annotations are distinct pool members labeled by the oracle
    std::set<ContentVector> seen;
    std::set<ContentVector> pool_set(s.pool.members.begin(), s.pool.members.end());
    for (const auto& a : result.annotations) {
        CHECK(seen.insert(a.game).second);
        CHECK(pool_set.count(a.game) == 1);
        CHECK(a.acceptability == s.world.label(a.game));
    }
    // at most one new annotation per iteration plus the initialization draws
    CHECK(result.annotations.size() <=
          static_cast<std::size_t>(fast_config().max_iters +
                                   fast_config().init_retries));
    CHECK_FALSE(result.curve.points.empty());
}

TEST_CASE("validation games are never queried for annotation") {
    Setup s = make_setup(5);
    // overlap: plant validation games inside the pool
    for (int i = 0; i < 20; ++i) {
        s.pool.members.push_back(s.validation.entries[i].game);
    }
    const AcceptabilityOracle oracle = [&](const ContentVector& g) {
        return s.world.label(g);
    };
    const IcqResult result =
        active_learn_icq(s.pool, oracle, s.validation, fast_config(), 19);

    std::set<ContentVector> held;
    for (const auto& e : s.validation.entries) held.insert(e.game);
    for (const auto& a : result.annotations) {
        CHECK(held.count(a.game) == 0);
    }
}

TEST_CASE("active learning is deterministic under seed") {
    const Setup s = make_setup(7);
    const AcceptabilityOracle oracle = [&](const ContentVector& g) {
        return s.world.label(g);
    };
    const IcqResult a =
        active_learn_icq(s.pool, oracle, s.validation, fast_config(), 23);
    const IcqResult b =
        active_learn_icq(s.pool, oracle, s.validation, fast_config(), 23);
    CHECK(a.classifier == b.classifier);
    CHECK(a.annotations.size() == b.annotations.size());
}

TEST_CASE("error rates match direct recomputation") {
    const Setup s = make_setup(11);
    const AcceptabilityOracle oracle = [&](const ContentVector& g) {
        return s.world.label(g);
    };
    const IcqResult result =
        active_learn_icq(s.pool, oracle, s.validation, fast_config(), 29);

    int pos_total = 0, pos_wrong = 0, neg_total = 0, neg_wrong = 0;
    for (const auto& e : s.validation.entries) {
        const auto x = normalize(e.game, s.world.schema);
        const int pred = result.classifier.predict(x).first == 1 ? 1 : -1;
        if (e.acceptability == 1) {
            ++pos_total;
            pos_wrong += pred != 1;
        } else {
            ++neg_total;
            neg_wrong += pred != -1;
        }
    }
    const ErrorRates rates =
        evaluate_errors(result.classifier, s.validation, s.world.schema);
    CHECK(rates.positive ==
          doctest::Approx(static_cast<double>(pos_wrong) / pos_total));
    CHECK(rates.negative ==
          doctest::Approx(static_cast<double>(neg_wrong) / neg_total));
    CHECK(rates.hter == doctest::Approx(0.5 * (rates.positive + rates.negative)));
}

TEST_CASE("single-class pools are rejected after the retry budget") {
    Setup s = make_setup(13);
    const AcceptabilityOracle always_no = [](const ContentVector&) { return -1; };
    IcqConfig config = fast_config();
    config.init_retries = 5;
    CHECK_THROWS_AS(
        active_learn_icq(s.pool, always_no, s.validation, config, 31),
        DegenerateDataError);
}

TEST_CASE("filter_acceptable keeps exactly the games predicted positive") {
    const Setup s = make_setup(17);
    const AcceptabilityOracle oracle = [&](const ContentVector& g) {
        return s.world.label(g);
    };
    const IcqResult result =
        active_learn_icq(s.pool, oracle, s.validation, fast_config(), 37);

    const ContentSubspace accepted =
        filter_acceptable(s.pool, result.classifier);
    CHECK(accepted.tag == SubspaceTag::ReducedAcceptable);
    std::set<ContentVector> kept(accepted.members.begin(), accepted.members.end());
    for (const auto& g : s.pool.members) {
        const auto x = normalize(g, s.world.schema);
        const bool predicted_in = result.classifier.predict(x).first == 1;
        CHECK(kept.count(g) == (predicted_in ? 1u : 0u));
    }
}
