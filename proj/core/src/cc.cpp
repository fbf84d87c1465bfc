#include "lbpcg/cc.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "lbpcg/rng.hpp"

namespace lbpcg {

namespace {

std::vector<RandomForest> train_one_vs_rest(
    const std::vector<CcAnnotation>& annotations, int feature, int categories,
    const ContentSchema& schema, const ForestConfig& forest_config,
    std::uint64_t seed) {
    std::vector<std::vector<double>> inputs;
    inputs.reserve(annotations.size());
    for (const auto& a : annotations) inputs.push_back(normalize(a.game, schema));

    std::vector<RandomForest> models(categories);
    for (int c = 0; c < categories; ++c) {
        Dataset data;
        data.task = Task::Classification;
        data.inputs = inputs;
        data.targets.reserve(annotations.size());
        for (const auto& a : annotations) {
            data.targets.push_back(a.features.values[feature] == c ? 1.0 : 0.0);
        }
        models[c] = RandomForest::train(data, forest_config, derive_seed(seed, c));
    }
    return models;
}

std::pair<int, double> winner_take_all(const std::vector<RandomForest>& models,
                                       std::span<const double> x) {
    int best = 0;
    double best_score = -1.0;
    for (std::size_t c = 0; c < models.size(); ++c) {
        const double s = models[c].score_positive(x);
        if (s > best_score) {
            best_score = s;
            best = static_cast<int>(c);
        }
    }
    return {best, best_score};
}

// Overall and per-category validation error for one feature.
std::pair<double, std::vector<double>> validation_error(
    const std::vector<RandomForest>& models, const ValidationSet& validation,
    int feature, int categories, const ContentSchema& schema) {
    std::vector<int> total(categories, 0), wrong(categories, 0);
    int all = 0, all_wrong = 0;
    for (const auto& e : validation.entries) {
        if (!e.features) continue;
        const int truth = e.features->values[feature];
        const auto x = normalize(e.game, schema);
        const int predicted = winner_take_all(models, x).first;
        ++all;
        ++total[truth];
        if (predicted != truth) {
            ++all_wrong;
            ++wrong[truth];
        }
    }
    if (all == 0) {
        throw DegenerateValidationError("T_CC carries no feature labels");
    }
    std::vector<double> per(categories, 0.0);
    for (int c = 0; c < categories; ++c) {
        per[c] = total[c] ? static_cast<double>(wrong[c]) / total[c] : 0.0;
    }
    return {static_cast<double>(all_wrong) / all, per};
}

}  // namespace

CcResult active_learn_cc(const ContentSubspace& pool,
                         const FeatureOracle& annotator,
                         const ValidationSet& validation,
                         const std::vector<CcAnnotation>& reused,
                         const FeatureSchema& feature_schema,
                         const CcConfig& config, std::uint64_t seed) {
    pool.validate();
    if (pool.members.empty()) throw DegenerateDataError("empty CC query pool");
    const ContentSchema& schema = pool.schema;
    const int num_features = static_cast<int>(feature_schema.feature_count());

    std::vector<ContentVector> games = pool.members;
    std::sort(games.begin(), games.end());
    games.erase(std::unique(games.begin(), games.end()), games.end());

    std::set<ContentVector> validation_games;
    for (const auto& e : validation.entries) validation_games.insert(e.game);

    std::map<ContentVector, FeatureVector> annotated;
    for (const auto& r : reused) {
        if (!valid_under(r.features, feature_schema)) {
            throw ContractError("reused annotation has invalid features");
        }
        annotated.emplace(r.game, r.features);
    }

    std::vector<bool> queried(games.size(), false);
    for (std::size_t i = 0; i < games.size(); ++i) {
        if (annotated.count(games[i]) || validation_games.count(games[i])) {
            queried[i] = true;  // never ask the oracle about these again
        }
    }

    Rng rng(seed);
    auto annotate = [&](std::size_t idx) {
        queried[idx] = true;
        FeatureVector fv = annotator(games[idx]);
        if (!valid_under(fv, feature_schema)) {
            throw ContractError("feature oracle returned an invalid vector");
        }
        annotated.emplace(games[idx], fv);
    };

    CcResult result;
    result.models.resize(num_features);
    result.curves.resize(num_features);
    result.final_per_category_error.resize(num_features);

    for (int f = 0; f < num_features; ++f) {
        const int categories = feature_schema.domain_size(f);

        // ensure every category value is represented before training
        auto missing_categories = [&] {
            std::vector<bool> seen(categories, false);
            for (const auto& [g, fv] : annotated) seen[fv.values[f]] = true;
            std::vector<int> missing;
            for (int c = 0; c < categories; ++c) {
                if (!seen[c]) missing.push_back(c);
            }
            return missing;
        };
        const int budget = config.init_budget_per_category * categories;
        for (int attempt = 0;
             attempt < budget && !missing_categories().empty(); ++attempt) {
            std::size_t idx = rng.below(games.size());
            for (std::size_t off = 0; off < games.size(); ++off) {
                const std::size_t j = (idx + off) % games.size();
                if (!queried[j]) {
                    annotate(j);
                    break;
                }
            }
        }
        if (auto missing = missing_categories(); !missing.empty()) {
            std::string names;
            for (int c : missing) {
                if (!names.empty()) names += ", ";
                names += feature_schema.features[f].values[c];
            }
            throw MissingCategoryError("no annotation found for category: " +
                                       names);
        }

        auto snapshot = [&] {
            std::vector<CcAnnotation> list;
            list.reserve(annotated.size());
            for (const auto& [g, fv] : annotated) list.push_back({g, fv});
            return list;
        };

        double best_error = 2.0;
        int best_iter = 0;
        std::vector<RandomForest> best_models;
        std::vector<double> best_per_category;

        for (int iter = 1; iter <= config.max_iters; ++iter) {
            auto models =
                train_one_vs_rest(snapshot(), f, categories, schema,
                                  config.forest, derive_seed(seed, 5000 + iter));
            auto [overall, per_cat] =
                validation_error(models, validation, f, categories, schema);

            CurvePoint point;
            point.iteration = iter;
            point.pos_error = overall;
            point.neg_error = overall;
            point.hter = overall;
            if (overall < best_error) {
                best_error = overall;
                best_iter = iter;
                best_models = models;
                best_per_category = per_cat;
            }
            if (iter - best_iter >= config.stop_window) {
                result.curves[f].points.push_back(point);
                break;
            }

            // least-confidence query under winner-take-all
            long query = -1;
            double least = 2.0;
            for (std::size_t i = 0; i < games.size(); ++i) {
                if (queried[i]) continue;
                const auto x = normalize(games[i], schema);
                const double conf = winner_take_all(models, x).second;
                if (conf < least) {
                    least = conf;
                    query = static_cast<long>(i);
                }
            }
            if (query >= 0) {
                annotate(static_cast<std::size_t>(query));
                point.queried = query;
                point.new_annotation = true;
            }
            result.curves[f].points.push_back(point);
            if (query < 0) break;  // pool exhausted
        }

        CategoryModel model;
        model.feature_id = f;
        model.rejection_threshold = config.rejection_threshold;
        model.one_vs_rest = std::move(best_models);
        result.models[f] = std::move(model);
        result.final_per_category_error[f] = std::move(best_per_category);
    }

    for (const auto& [g, fv] : annotated) result.annotations.push_back({g, fv});
    return result;
}

std::pair<int, double> categorize(const CategoryModel& model,
                                  const ContentVector& g,
                                  const ContentSchema& schema) {
    const auto x = normalize(g, schema);
    int best = 0;
    double best_score = -1.0;
    for (std::size_t c = 0; c < model.one_vs_rest.size(); ++c) {
        const double s = model.one_vs_rest[c].score_positive(x);
        if (s > best_score) {
            best_score = s;
            best = static_cast<int>(c);
        }
    }
    return {best, best_score};
}

ContentSubspace filter_confident(const ContentSubspace& space,
                                 const CategoryModel& model, double threshold) {
    if (threshold < 0.0 || threshold > 1.0) {
        throw ConfigError("confidence threshold must lie in [0,1]");
    }
    space.validate();
    ContentSubspace out;
    out.schema = space.schema;
    out.tag = SubspaceTag::ConfidentAcceptable;
    for (const auto& g : space.members) {
        const auto [category, confidence] = categorize(model, g, space.schema);
        if (confidence >= threshold) {
            out.members.push_back(g);
            out.categories.push_back(category);
            out.confidences.push_back(confidence);
        }
    }
    return out;
}

}  // namespace lbpcg
