#include "lbpcg/icq.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

#include "lbpcg/rng.hpp"

namespace lbpcg {

void LearningCurve::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << "iteration,pos_error,neg_error,hter,queried,new_annotation\n";
    for (const auto& p : points) {
        out << p.iteration << ',' << p.pos_error << ',' << p.neg_error << ','
            << p.hter << ',' << p.queried << ',' << (p.new_annotation ? 1 : 0)
            << '\n';
    }
}

ErrorRates evaluate_errors(const RandomForest& classifier,
                           const ValidationSet& validation,
                           const ContentSchema& schema) {
    int pos_total = 0, pos_wrong = 0, neg_total = 0, neg_wrong = 0;
    for (const auto& e : validation.entries) {
        const auto x = normalize(e.game, schema);
        const int predicted = classifier.predict(x).first == 1 ? 1 : -1;
        if (e.acceptability == 1) {
            ++pos_total;
            if (predicted != 1) ++pos_wrong;
        } else {
            ++neg_total;
            if (predicted != -1) ++neg_wrong;
        }
    }
    if (pos_total == 0 || neg_total == 0) {
        throw DegenerateValidationError(
            "validation set must contain both classes");
    }
    ErrorRates r;
    r.positive = static_cast<double>(pos_wrong) / pos_total;
    r.negative = static_cast<double>(neg_wrong) / neg_total;
    r.hter = 0.5 * (r.positive + r.negative);
    return r;
}

namespace {

Dataset make_dataset(const std::vector<LabeledGame>& annotations,
                     const ContentSchema& schema) {
    Dataset data;
    data.task = Task::Classification;
    for (const auto& a : annotations) {
        data.inputs.push_back(normalize(a.game, schema));
        data.targets.push_back(a.acceptability == 1 ? 1.0 : 0.0);
    }
    return data;
}

}  // namespace

IcqResult active_learn_icq(const ContentSubspace& pool,
                           const AcceptabilityOracle& annotator,
                           const ValidationSet& validation,
                           const IcqConfig& config, std::uint64_t seed) {
    pool.validate();
    if (pool.members.empty()) throw DegenerateDataError("empty query pool");
    const ContentSchema& schema = pool.schema;

    // sorted pool copy so least-confidence ties break on lexicographic order
    std::vector<ContentVector> games = pool.members;
    std::sort(games.begin(), games.end());
    games.erase(std::unique(games.begin(), games.end()), games.end());

    std::set<ContentVector> validation_games;
    for (const auto& e : validation.entries) validation_games.insert(e.game);

    std::vector<bool> annotated(games.size(), false);
    std::vector<bool> queryable(games.size(), true);
    for (std::size_t i = 0; i < games.size(); ++i) {
        if (validation_games.count(games[i])) queryable[i] = false;
    }

    IcqResult result;
    Rng rng(seed);

    auto annotate = [&](std::size_t idx) {
        annotated[idx] = true;
        LabeledGame lg;
        lg.game = games[idx];
        lg.acceptability = annotator(games[idx]);
        if (lg.acceptability != 1 && lg.acceptability != -1) {
            throw ContractError("annotator returned a non-binary label");
        }
        result.annotations.push_back(lg);
    };

    // initialization: random games until both classes present
    bool have_pos = false, have_neg = false;
    for (int attempt = 0; attempt < config.init_retries && !(have_pos && have_neg);
         ++attempt) {
        std::size_t idx = rng.below(games.size());
        bool found = false;
        for (std::size_t off = 0; off < games.size(); ++off) {
            const std::size_t j = (idx + off) % games.size();
            if (!annotated[j] && queryable[j]) {
                annotate(j);
                have_pos |= result.annotations.back().acceptability == 1;
                have_neg |= result.annotations.back().acceptability == -1;
                found = true;
                break;
            }
        }
        if (!found) break;  // pool exhausted
    }
    if (!(have_pos && have_neg)) {
        throw DegenerateDataError(
            "initial annotations are single-class after retry budget");
    }

    std::vector<double> norm_cache;
    for (int iter = 1; iter <= config.max_iters; ++iter) {
        result.classifier = RandomForest::train(
            make_dataset(result.annotations, schema), config.forest,
            derive_seed(seed, 1000 + iter));
        const ErrorRates err = evaluate_errors(result.classifier, validation, schema);

        CurvePoint point;
        point.iteration = iter;
        point.pos_error = err.positive;
        point.neg_error = err.negative;
        point.hter = err.hter;

        const bool converged =
            err.hter <= config.stop_hter &&
            std::abs(err.positive - err.negative) <= config.balance_band;
        if (converged) {
            result.curve.points.push_back(point);
            break;
        }

        // query selection over unannotated, queryable pool games
        long query = -1;
        if (config.policy == QueryPolicy::LeastConfidence) {
            double best_margin = 2.0;
            for (std::size_t i = 0; i < games.size(); ++i) {
                if (annotated[i] || !queryable[i]) continue;
                const auto x = normalize(games[i], schema);
                const double margin =
                    std::abs(result.classifier.score_positive(x) - 0.5);
                if (margin < best_margin) {
                    best_margin = margin;
                    query = static_cast<long>(i);
                }
            }
        } else {
            std::vector<std::size_t> open;
            for (std::size_t i = 0; i < games.size(); ++i) {
                if (!annotated[i] && queryable[i]) open.push_back(i);
            }
            if (!open.empty()) query = static_cast<long>(open[rng.below(open.size())]);
        }

        if (query >= 0) {
            annotate(static_cast<std::size_t>(query));
            point.queried = query;
            point.new_annotation = true;
        }
        result.curve.points.push_back(point);
        if (query < 0) break;  // pool exhausted
    }
    return result;
}

ContentSubspace filter_acceptable(const ContentSubspace& space,
                                  const RandomForest& classifier) {
    space.validate();
    ContentSubspace out;
    out.schema = space.schema;
    out.tag = space.tag == SubspaceTag::Reduced ? SubspaceTag::ReducedAcceptable
                                                : SubspaceTag::Acceptable;
    for (const auto& g : space.members) {
        const auto x = normalize(g, space.schema);
        if (classifier.predict(x).first == 1) out.members.push_back(g);
    }
    if (out.members.empty()) {
        std::cerr << "warning: acceptability filter produced an empty subspace\n";
    }
    return out;
}

}  // namespace lbpcg
