#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "lbpcg/content.hpp"
#include "lbpcg/rng.hpp"

using namespace lbpcg;

namespace {

ContentSchema small_schema(std::vector<int> cards) {
    std::vector<ParamDescriptor> dims;
    for (std::size_t i = 0; i < cards.size(); ++i) {
        dims.push_back({"d" + std::to_string(i), cards[i]});
    }
    return ContentSchema(std::move(dims));
}

ContentVector random_game(const ContentSchema& schema, Rng& rng) {
    ContentVector g;
    for (std::size_t d = 0; d < schema.dim_count(); ++d) {
        g.values.push_back(static_cast<int>(rng.below(schema.cardinality(d))));
    }
    return g;
}

}  // namespace

TEST_CASE("default schema spans the expected space") {
    const ContentSchema schema = ContentSchema::default_schema();
    CHECK(schema.dim_count() == 9);
    std::uint64_t product = 1;
    for (std::size_t i = 0; i < schema.dim_count(); ++i) {
        CHECK(schema.cardinality(i) >= 2);
        product *= schema.cardinality(i);
    }
    CHECK(product == 116640);
    CHECK(schema.space_size() == product);
}

TEST_CASE("space_size overflow is detected") {
    std::vector<int> cards(11, 100);  // 10^22 > 2^64
    const ContentSchema schema = small_schema(cards);
    CHECK_THROWS_AS(schema.space_size(), SizeOverflowError);
}

TEST_CASE("enumeration visits every game exactly once, in order") {
    Rng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<int> cards;
        const int dims = 2 + static_cast<int>(rng.below(4));
        for (int d = 0; d < dims; ++d) cards.push_back(2 + (int)rng.below(3));
        const ContentSchema schema = small_schema(cards);

        SpaceEnumerator it(schema);
        std::set<ContentVector> seen;
        std::optional<ContentVector> prev;
        std::uint64_t count = 0;
        while (auto g = it.next()) {
            CHECK(valid_under(*g, schema));
            CHECK(seen.insert(*g).second);  // distinct
            if (prev) CHECK(*prev < *g);    // lexicographic
            prev = *g;
            ++count;
        }
        CHECK(count == schema.space_size());
        CHECK(it.next() == std::nullopt);  // stays exhausted
    }
}

TEST_CASE("enumeration restart from a cursor resumes mid-stream") {
    const ContentSchema schema = small_schema({3, 2, 4});
    SpaceEnumerator full(schema);
    std::vector<ContentVector> all;
    while (auto g = full.next()) all.push_back(*g);

    const std::size_t at = all.size() / 2;
    SpaceEnumerator resumed(schema);
    resumed.seek(all[at]);
    for (std::size_t i = at; i < all.size(); ++i) {
        auto g = resumed.next();
        REQUIRE(g.has_value());
        CHECK(*g == all[i]);
    }
    CHECK(resumed.next() == std::nullopt);
}

TEST_CASE("validity checks catch out-of-range and wrong-arity games") {
    const ContentSchema schema = small_schema({3, 2});
    CHECK(valid_under(ContentVector{{2, 1}}, schema));
    CHECK_FALSE(valid_under(ContentVector{{3, 0}}, schema));  // over cardinality
    CHECK_FALSE(valid_under(ContentVector{{-1, 0}}, schema));
    CHECK_FALSE(valid_under(ContentVector{{0}}, schema));  // wrong arity
    CHECK_THROWS_AS(require_valid(ContentVector{{3, 0}}, schema), Error);
}

TEST_CASE("normalization maps each dimension onto [0,1] endpoints") {
    const ContentSchema schema = small_schema({3, 5});
    const auto lo = normalize(ContentVector{{0, 0}}, schema);
    const auto hi = normalize(ContentVector{{2, 4}}, schema);
    CHECK(lo == std::vector<double>{0.0, 0.0});
    CHECK(hi == std::vector<double>{1.0, 1.0});
    const auto mid = normalize(ContentVector{{1, 2}}, schema);
    CHECK(mid[0] == doctest::Approx(0.5));
    CHECK(mid[1] == doctest::Approx(0.5));
}

TEST_CASE("distance is a bounded metric") {
    const ContentSchema schema = ContentSchema::default_schema();
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_game(schema, rng);
        const auto b = random_game(schema, rng);
        const auto c = random_game(schema, rng);
        const double ab = distance(a, b, schema);
        const double ba = distance(b, a, schema);
        const double ac = distance(a, c, schema);
        const double cb = distance(c, b, schema);
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        CHECK(ab == doctest::Approx(ba));
        CHECK(distance(a, a, schema) == 0.0);
        CHECK(ab <= ac + cb + 1e-12);  // triangle inequality
        if (a != b) CHECK(ab > 0.0);
    }
}

TEST_CASE("labeled games require features only when acceptable") {
    LabeledGame ok;
    ok.game = ContentVector{{0, 0}};
    ok.acceptability = 1;
    ok.features = FeatureVector{{2}};
    CHECK_NOTHROW(ok.validate());

    LabeledGame bad = ok;
    bad.acceptability = 0;  // neither +1 nor -1
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("confident subspaces keep category arrays parallel") {
    ContentSubspace s;
    s.schema = small_schema({2, 2});
    s.tag = SubspaceTag::ConfidentAcceptable;
    s.members = {ContentVector{{0, 0}}, ContentVector{{1, 1}}};
    s.categories = {0, 1};
    s.confidences = {0.9, 0.8};
    CHECK_NOTHROW(s.validate());

    s.categories.pop_back();
    CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("subspace tags round-trip through their names") {
    for (SubspaceTag tag :
         {SubspaceTag::Full, SubspaceTag::Reduced, SubspaceTag::Acceptable,
          SubspaceTag::ReducedAcceptable, SubspaceTag::ConfidentAcceptable}) {
        CHECK(subspace_tag_from_string(to_string(tag)) == tag);
    }
    CHECK_THROWS_AS(subspace_tag_from_string("nonsense"), Error);
}
