#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "lbpcg/rng.hpp"
#include "lbpcg/serialize.hpp"

using namespace lbpcg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("lbpcg_serialize_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

ContentSchema small_schema() {
    return ContentSchema({{"a", 4}, {"b", 5}, {"c", 3}});
}

Dataset sample_dataset(Task task, std::uint64_t seed) {
    Dataset d;
    d.task = task;
    Rng rng(seed);
    for (int i = 0; i < 50; ++i) {
        d.inputs.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
        d.targets.push_back(task == Task::Classification
                                ? (d.inputs.back()[0] > 0.5 ? 1.0 : 0.0)
                                : rng.uniform());
    }
    return d;
}

std::vector<ContentVector> sample_games(const ContentSchema& schema, int n,
                                        std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ContentVector> out;
    for (int i = 0; i < n; ++i) {
        ContentVector g;
        for (std::size_t d = 0; d < schema.dim_count(); ++d) {
            g.values.push_back(static_cast<int>(rng.below(schema.cardinality(d))));
        }
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace

TEST_CASE("random forest round-trips bit-exactly") {
    TempDir dir;
    const Dataset data = sample_dataset(Task::Classification, 3);
    ForestConfig config;
    config.trees = 8;
    const RandomForest model = RandomForest::train(data, config, 7);

    const fs::path file = dir.path / "forest.json";
    save_artifact(model, file);
    const RandomForest loaded = load_artifact<RandomForest>(file);
    CHECK(loaded == model);

    // saving the loaded model reproduces the same bytes
    const fs::path again = dir.path / "forest2.json";
    save_artifact(loaded, again);
    std::ifstream a(file), b(again);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
}

TEST_CASE("kernel ridge round-trips bit-exactly") {
    TempDir dir;
    const Dataset data = sample_dataset(Task::Regression, 5);
    const KernelRidge model = KernelRidge::fit(data, 0.5, 1e-3);
    const fs::path file = dir.path / "krr.json";
    save_artifact(model, file);
    CHECK(load_artifact<KernelRidge>(file) == model);
}

TEST_CASE("preference ensemble round-trips including neutral members") {
    TempDir dir;
    FeatureSchema features;
    features.features = {{"band", {"x", "y", "z"}}};

    PreferenceEnsemble ensemble;
    ensemble.feature_schema = features;
    ensemble.playlog_dims = 3;
    ensemble.confidence_threshold = 0.61;
    ensemble.rejection_threshold = 0.25;

    // the member forest sees play-logs concatenated with one-hot features
    Dataset encoded;
    encoded.task = Task::Classification;
    Rng data_rng(7);
    for (int i = 0; i < 50; ++i) {
        const std::vector<double> playlog = {data_rng.uniform(),
                                             data_rng.uniform(),
                                             data_rng.uniform()};
        FeatureVector fv{{static_cast<int>(data_rng.below(3))}};
        encoded.inputs.push_back(encode_pdc_input(playlog, fv, features));
        encoded.targets.push_back(playlog[0] > 0.5 ? 1.0 : 0.0);
    }
    EnsembleMember trained;
    trained.model = RandomForest::train(encoded, ForestConfig{.trees = 5}, 9);
    trained.cv_accuracy = 0.8;
    trained.weight = 0.7;
    trained.alpha_threshold = 0.3;
    EnsembleMember neutral;
    neutral.weight = 0.3;
    neutral.beta_threshold = 0.9;
    ensemble.members = {trained, neutral};

    const fs::path file = dir.path / "pdc.json";
    save_artifact(ensemble, file);
    const PreferenceEnsemble loaded = load_artifact<PreferenceEnsemble>(file);

    REQUIRE(loaded.members.size() == 2);
    CHECK(loaded.members[0].model == trained.model);
    CHECK(loaded.members[0].weight == trained.weight);
    CHECK(loaded.members[0].cv_accuracy == trained.cv_accuracy);
    CHECK(loaded.members[0].alpha_threshold == trained.alpha_threshold);
    CHECK_FALSE(loaded.members[1].model.has_value());
    CHECK(loaded.members[1].beta_threshold == neutral.beta_threshold);
    CHECK(loaded.feature_schema == features);
    CHECK(loaded.playlog_dims == 3);

    // the loaded ensemble makes identical decisions
    Rng rng(11);
    for (int i = 0; i < 20; ++i) {
        const std::vector<double> playlog = {rng.uniform(), rng.uniform(),
                                             rng.uniform()};
        FeatureVector fv{{static_cast<int>(rng.below(3))}};
        const auto expected = predict_preference(ensemble, playlog, fv);
        const auto got = predict_preference(loaded, playlog, fv);
        CHECK(got.first == expected.first);
        CHECK(got.second == doctest::Approx(expected.second));
    }
}

TEST_CASE("cluster partitions and subspaces round-trip") {
    TempDir dir;
    const ContentSchema schema = small_schema();
    const auto points = sample_games(schema, 40, 13);
    const ClusterPartition partition = k_medoids(points, 4, schema, 17);
    const fs::path pfile = dir.path / "clusters.json";
    save_artifact(partition, pfile);
    CHECK(load_artifact<ClusterPartition>(pfile) == partition);

    ContentSubspace subspace;
    subspace.schema = schema;
    subspace.tag = SubspaceTag::ConfidentAcceptable;
    subspace.members = sample_games(schema, 12, 19);
    subspace.categories.assign(12, 1);
    subspace.confidences.assign(12, 0.75);
    const fs::path sfile = dir.path / "subspace.json";
    save_artifact(subspace, sfile);
    CHECK(load_artifact<ContentSubspace>(sfile) == subspace);
}

TEST_CASE("category models round-trip") {
    TempDir dir;
    CategoryModel model;
    model.feature_id = 0;
    model.rejection_threshold = 0.4;
    for (int c = 0; c < 3; ++c) {
        model.one_vs_rest.push_back(RandomForest::train(
            sample_dataset(Task::Classification, 23 + c),
            ForestConfig{.trees = 4}, c));
    }
    const fs::path file = dir.path / "cc.json";
    save_artifact(model, file);
    CHECK(load_artifact<CategoryModel>(file) == model);
}

TEST_CASE("player sessions persist their full online state") {
    TempDir dir;
    PlayerSession session;
    session.state = {IpStateKind::Produce, 3};
    session.categorize_attempts = 4;
    session.beta_served = {1, 0, 1};
    session.gac_served_phase = {0, 1};
    session.round_robin_cursor = 2;
    session.rng_state = 0xdeadbeefULL;
    SessionEvent e;
    e.game_index = 5;
    e.from_beta = true;
    e.category = 3;
    e.state_before = IpStateKind::Categorize;
    e.state_after = IpStateKind::Produce;
    e.decision = Decision::Positive;
    e.score = 0.87;
    session.history = {e};

    const fs::path file = dir.path / "session.json";
    save_artifact(session, file);
    const PlayerSession loaded = load_artifact<PlayerSession>(file);

    CHECK(loaded.state == session.state);
    CHECK(loaded.categorize_attempts == 4);
    CHECK(loaded.beta_served == session.beta_served);
    CHECK(loaded.gac_served_phase == session.gac_served_phase);
    CHECK(loaded.round_robin_cursor == 2);
    CHECK(loaded.rng_state == 0xdeadbeefULL);
    REQUIRE(loaded.history.size() == 1);
    CHECK(loaded.history[0].game_index == 5);
    CHECK(loaded.history[0].from_beta);
    CHECK(loaded.history[0].category == 3);
    CHECK(loaded.history[0].state_before == IpStateKind::Categorize);
    CHECK(loaded.history[0].state_after == IpStateKind::Produce);
    CHECK(loaded.history[0].decision == Decision::Positive);
    CHECK(loaded.history[0].score == doctest::Approx(0.87));
    CHECK_FALSE(loaded.awaiting_observe());
}

TEST_CASE("corrupt, mis-versioned, and mismatched files are rejected") {
    TempDir dir;
    const fs::path file = dir.path / "artifact.json";

    {
        std::ofstream out(file);
        out << "this is not json";
    }
    CHECK_THROWS_AS(load_artifact<RandomForest>(file), SerializationError);

    const Dataset data = sample_dataset(Task::Classification, 29);
    const RandomForest model =
        RandomForest::train(data, ForestConfig{.trees = 3}, 31);
    save_artifact(model, file);

    // a forest artifact is not a kernel ridge artifact
    CHECK_THROWS_AS(load_artifact<KernelRidge>(file), SerializationError);

    // tamper with the version field
    std::ifstream in(file);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    const std::string needle =
        "\"format_version\": " + std::to_string(kFormatVersion);
    const auto pos = text.find(needle);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, needle.size(), "\"format_version\": 999");
    {
        std::ofstream out(file);
        out << text;
    }
    CHECK_THROWS_AS(load_artifact<RandomForest>(file), VersionMismatchError);

    CHECK_THROWS_AS(load_artifact<RandomForest>(dir.path / "missing.json"),
                    Error);
}
