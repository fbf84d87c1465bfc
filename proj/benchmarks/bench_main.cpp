#include <benchmark/benchmark.h>

#include "lbpcg/clustering.hpp"
#include "lbpcg/content.hpp"
#include "lbpcg/gpe.hpp"
#include "lbpcg/learners.hpp"
#include "lbpcg/rng.hpp"
#include "lbpcg/simworld.hpp"

namespace {

using namespace lbpcg;

std::vector<ContentVector> random_games(const ContentSchema& schema, int n,
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

void BM_Distance(benchmark::State& state) {
    const ContentSchema schema = ContentSchema::default_schema();
    const auto games = random_games(schema, 1024, 7);
    std::size_t i = 0;
    for (auto _ : state) {
        const double d = distance(games[i % 1024], games[(i + 511) % 1024], schema);
        benchmark::DoNotOptimize(d);
        ++i;
    }
}
BENCHMARK(BM_Distance);

void BM_Enumerate(benchmark::State& state) {
    const ContentSchema schema = ContentSchema::default_schema();
    for (auto _ : state) {
        SpaceEnumerator it(schema);
        std::uint64_t count = 0;
        while (it.next()) ++count;
        benchmark::DoNotOptimize(count);
    }
}
BENCHMARK(BM_Enumerate);

void BM_KMedoids(benchmark::State& state) {
    const ContentSchema schema = ContentSchema::default_schema();
    const auto games = random_games(schema, static_cast<int>(state.range(0)), 11);
    for (auto _ : state) {
        const auto partition = k_medoids(games, 20, schema, 3, 10);
        benchmark::DoNotOptimize(partition.total_cost);
    }
}
BENCHMARK(BM_KMedoids)->Arg(500)->Arg(2000);

void BM_ForestTrain(benchmark::State& state) {
    const ContentSchema schema = ContentSchema::default_schema();
    const WorldModel world(schema, FeatureSchema::default_difficulty(), {});
    const auto games = random_games(schema, 400, 13);
    Dataset data;
    data.task = Task::Classification;
    for (const auto& g : games) {
        data.inputs.push_back(normalize(g, schema));
        data.targets.push_back(world.oracle_acceptability(g) > 0 ? 1.0 : 0.0);
    }
    ForestConfig config;
    config.trees = 50;
    for (auto _ : state) {
        const RandomForest forest = RandomForest::train(data, config, 5);
        benchmark::DoNotOptimize(forest.trees().size());
    }
}
BENCHMARK(BM_ForestTrain);

void BM_EStep(benchmark::State& state) {
    const ContentSchema schema = ContentSchema::default_schema();
    const WorldModel world(schema, FeatureSchema::default_difficulty(), {});
    const auto games = random_games(schema, 100, 17);
    BetaCohortConfig cohort_config;
    const BetaCohort cohort = generate_beta_cohort(world, games, cohort_config, 19);
    AnnotatorReliability reliability;
    reliability.alpha.assign(cohort.surveys.player_count, 0.7);
    reliability.beta.assign(cohort.surveys.player_count, 0.8);
    const std::vector<double> h(games.size(), 0.5);
    for (auto _ : state) {
        const auto consensus = e_step(cohort.surveys, reliability, h);
        benchmark::DoNotOptimize(consensus.gamma.data());
    }
}
BENCHMARK(BM_EStep);

}  // namespace

BENCHMARK_MAIN();
