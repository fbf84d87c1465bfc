#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lbpcg/learners.hpp"
#include "lbpcg/rng.hpp"

using namespace lbpcg;

namespace {

// two Gaussian-ish blobs separated along the first axis
Dataset blobs(int n, std::uint64_t seed) {
    Dataset d;
    d.task = Task::Classification;
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        const int label = i % 2;
        const double cx = label ? 0.8 : 0.2;
        d.inputs.push_back({cx + 0.05 * rng.normal(), rng.uniform()});
        d.targets.push_back(label);
    }
    return d;
}

}  // namespace

TEST_CASE("random forest separates well-separated classes") {
    const Dataset data = blobs(200, 3);
    ForestConfig config;
    config.trees = 30;
    const RandomForest forest = RandomForest::train(data, config, 7);
    CHECK(forest.tree_count() == 30);
    CHECK(forest.dims() == 2);

    int correct = 0;
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const int label = i % 2;
        const double cx = label ? 0.8 : 0.2;
        const std::vector<double> x = {cx + 0.05 * rng.normal(), rng.uniform()};
        const auto [pred, confidence] = forest.predict(x);
        CHECK(confidence >= 0.0);
        CHECK(confidence <= 1.0);
        correct += pred == label;
        // score_positive and predict agree on the winning side
        const double s = forest.score_positive(x);
        CHECK((pred == 1) == (s >= 0.5));
    }
    CHECK(correct >= 95);
}

TEST_CASE("forest training is a pure function of (data, config, seed)") {
    const Dataset data = blobs(80, 11);
    ForestConfig config;
    config.trees = 10;
    const RandomForest a = RandomForest::train(data, config, 42);
    const RandomForest b = RandomForest::train(data, config, 42);
    const RandomForest c = RandomForest::train(data, config, 43);
    CHECK(a == b);
    CHECK(a.trees() != c.trees());
}

TEST_CASE("forest rejects dimension mismatches and single-class data") {
    const Dataset data = blobs(40, 17);
    const RandomForest forest = RandomForest::train(data, ForestConfig{.trees = 5}, 1);
    CHECK_THROWS_AS(forest.predict(std::vector<double>{0.5}),
                    DimensionMismatchError);

    Dataset flat = data;
    for (auto& t : flat.targets) t = 1.0;
    CHECK_THROWS_AS(RandomForest::train(flat, ForestConfig{.trees = 5}, 1),
                    DegenerateDataError);
}

TEST_CASE("kernel ridge solves its linear system") {
    Dataset d;
    d.task = Task::Regression;
    Rng rng(23);
    for (int i = 0; i < 40; ++i) {
        d.inputs.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
        d.targets.push_back(rng.uniform());
    }
    const double bandwidth = 0.5, ridge = 1e-3;
    const KernelRidge model = KernelRidge::fit(d, bandwidth, ridge);
    REQUIRE(model.trained());

    // independent residual check: || (K + ridge*I) alpha - y ||_inf
    const auto& alpha = model.coefficients();
    double worst = 0.0;
    for (int i = 0; i < 40; ++i) {
        double row = ridge * alpha[i];
        for (int j = 0; j < 40; ++j) {
            row += rbf_kernel(d.inputs[i], d.inputs[j], bandwidth) * alpha[j];
        }
        worst = std::max(worst, std::abs(row - d.targets[i]));
    }
    CHECK(worst <= 1e-8);

    for (int i = 0; i < 40; ++i) {
        const double p = model.predict(d.inputs[i]);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("kernel ridge interpolates a smooth target") {
    Dataset d;
    d.task = Task::Regression;
    Rng rng(41);
    auto f = [](const std::vector<double>& x) {
        return 0.5 + 0.3 * std::sin(3.0 * x[0]) * std::cos(2.0 * x[1]);
    };
    for (int i = 0; i < 80; ++i) {
        d.inputs.push_back({rng.uniform(), rng.uniform()});
        d.targets.push_back(f(d.inputs.back()));
    }
    const KernelRidge model = KernelRidge::fit(d, 0.4, 1e-6);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const std::vector<double> x = {rng.uniform(), rng.uniform()};
        worst = std::max(worst, std::abs(model.raw_predict(x) - f(x)));
    }
    CHECK(worst < 0.05);
}

TEST_CASE("rbf kernel is a positive semi-definite similarity") {
    Rng rng(29);
    std::vector<std::vector<double>> xs;
    for (int i = 0; i < 25; ++i) xs.push_back({rng.uniform(), rng.uniform()});

    for (const auto& x : xs) {
        CHECK(rbf_kernel(x, x, 0.7) == doctest::Approx(1.0));
    }
    // z^T K z >= 0 for random z (Monte-Carlo PSD check)
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> z;
        for (std::size_t i = 0; i < xs.size(); ++i) z.push_back(rng.normal());
        double quad = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            for (std::size_t j = 0; j < xs.size(); ++j) {
                quad += z[i] * z[j] * rbf_kernel(xs[i], xs[j], 0.7);
            }
        }
        CHECK(quad >= -1e-9);
    }
}

TEST_CASE("cross-validation pools held-out accuracy over stratified folds") {
    const Dataset data = blobs(60, 31);

    const Trainer perfect = [](const Dataset&, std::uint64_t) {
        return Predictor([](std::span<const double> x) {
            return x[0] > 0.5 ? 1 : 0;
        });
    };
    CHECK(cross_validate(data, 5, perfect, 1) == doctest::Approx(1.0));

    const Trainer always_zero = [](const Dataset&, std::uint64_t) {
        return Predictor([](std::span<const double>) { return 0; });
    };
    CHECK(cross_validate(data, 5, always_zero, 1) == doctest::Approx(0.5));

    CHECK_THROWS_AS(cross_validate(data, 1, perfect, 1), ConfigError);
}

TEST_CASE("cross-validation falls back to majority vote on degenerate folds") {
    // 5 rows, one positive: some training folds are single-class
    Dataset d;
    d.task = Task::Classification;
    for (int i = 0; i < 5; ++i) {
        d.inputs.push_back({static_cast<double>(i)});
        d.targets.push_back(i == 0 ? 1.0 : 0.0);
    }
    const Trainer strict = [](const Dataset& train, std::uint64_t) {
        int pos = 0;
        for (double t : train.targets) pos += t == 1.0;
        if (pos == 0 || pos == static_cast<int>(train.size())) {
            throw DegenerateDataError("single class");
        }
        return Predictor([](std::span<const double>) { return 0; });
    };
    const double acc = cross_validate(d, 5, strict, 9);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
}

TEST_CASE("dataset fingerprint tracks content") {
    Dataset a = blobs(20, 37);
    Dataset b = a;
    CHECK(a.fingerprint() == b.fingerprint());
    b.targets[3] = 1.0 - b.targets[3];
    CHECK(a.fingerprint() != b.fingerprint());
}
