#include "lbpcg/gpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lbpcg {

void SurveyMatrix::validate() const {
    for (const auto& e : entries) {
        if (e.game < 0 || e.game >= static_cast<int>(games.size())) {
            throw ContractError("survey entry references an unlisted game");
        }
        if (e.player < 0 || e.player >= player_count) {
            throw ContractError("survey entry references an unknown player");
        }
        if (e.label != 0 && e.label != 1) {
            throw ContractError("survey label must be 0 or 1");
        }
    }
}

std::vector<std::vector<int>> SurveyMatrix::entries_by_game() const {
    std::vector<std::vector<int>> idx(games.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        idx[entries[i].game].push_back(static_cast<int>(i));
    }
    return idx;
}

std::vector<std::vector<int>> SurveyMatrix::entries_by_player() const {
    std::vector<std::vector<int>> idx(player_count);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        idx[entries[i].player].push_back(static_cast<int>(i));
    }
    return idx;
}

ConsensusEstimate e_step(const SurveyMatrix& surveys,
                         const AnnotatorReliability& reliability,
                         std::span<const double> h) {
    surveys.validate();
    if (h.size() != surveys.games.size()) {
        throw DimensionMismatchError("prior vector length != game count");
    }
    if (reliability.alpha.size() < static_cast<std::size_t>(surveys.player_count)) {
        throw ContractError("reliability undefined for some players");
    }

    const double neg_inf = -std::numeric_limits<double>::infinity();
    const auto by_game = surveys.entries_by_game();

    ConsensusEstimate out;
    const std::size_t n = surveys.games.size();
    out.gamma.resize(n);
    out.a.resize(n);
    out.b.resize(n);
    out.h.assign(h.begin(), h.end());
    out.degenerate.assign(n, false);

    for (std::size_t g = 0; g < n; ++g) {
        double log_a = 0.0, log_b = 0.0;
        for (int ei : by_game[g]) {
            const auto& e = surveys.entries[ei];
            const double alpha = reliability.alpha[e.player];
            const double beta = reliability.beta[e.player];
            log_a += e.label == 1 ? std::log(alpha) : std::log(1.0 - alpha);
            log_b += e.label == 1 ? std::log(1.0 - beta) : std::log(beta);
        }
        out.a[g] = std::exp(log_a);
        out.b[g] = std::exp(log_b);

        const double hg = std::clamp(out.h[g], 0.0, 1.0);
        const double log_pos = hg > 0.0 ? log_a + std::log(hg) : neg_inf;
        const double log_neg = hg < 1.0 ? log_b + std::log(1.0 - hg) : neg_inf;

        if (log_pos == neg_inf && log_neg == neg_inf) {
            out.gamma[g] = hg;  // denominator exactly zero
            out.degenerate[g] = true;
        } else if (log_pos == neg_inf) {
            out.gamma[g] = 0.0;
        } else if (log_neg == neg_inf) {
            out.gamma[g] = 1.0;
        } else {
            out.gamma[g] = 1.0 / (1.0 + std::exp(log_neg - log_pos));
        }
    }
    return out;
}

ConsensusEstimate e_step(const SurveyMatrix& surveys,
                         const AnnotatorReliability& reliability,
                         const KernelRidge& regressor,
                         const ContentSchema& schema) {
    std::vector<double> h(surveys.games.size());
    for (std::size_t g = 0; g < h.size(); ++g) {
        h[g] = regressor.predict(normalize(surveys.games[g], schema));
    }
    return e_step(surveys, reliability, h);
}

AnnotatorReliability m_step(const SurveyMatrix& surveys,
                            const ConsensusEstimate& consensus,
                            const AnnotatorReliability& previous) {
    surveys.validate();
    const auto by_player = surveys.entries_by_player();

    AnnotatorReliability out = previous;
    out.alpha.resize(surveys.player_count, 0.5);
    out.beta.resize(surveys.player_count, 0.5);

    for (int p = 0; p < surveys.player_count; ++p) {
        double num_a = 0.0, den_a = 0.0, num_b = 0.0, den_b = 0.0;
        for (int ei : by_player[p]) {
            const auto& e = surveys.entries[ei];
            const double gamma = consensus.gamma[e.game];
            num_a += gamma * e.label;
            den_a += gamma;
            num_b += (1.0 - gamma) * (1 - e.label);
            den_b += 1.0 - gamma;
        }
        if (den_a > 0.0) out.alpha[p] = num_a / den_a;
        if (den_b > 0.0) out.beta[p] = num_b / den_b;
        // zero denominators keep the previous value
    }
    return out;
}

double log_likelihood(const SurveyMatrix& surveys,
                      const AnnotatorReliability& reliability,
                      std::span<const double> h) {
    surveys.validate();
    const double neg_inf = -std::numeric_limits<double>::infinity();
    const auto by_game = surveys.entries_by_game();

    double total = 0.0;
    for (std::size_t g = 0; g < surveys.games.size(); ++g) {
        double log_a = 0.0, log_b = 0.0;
        for (int ei : by_game[g]) {
            const auto& e = surveys.entries[ei];
            const double alpha = reliability.alpha[e.player];
            const double beta = reliability.beta[e.player];
            log_a += e.label == 1 ? std::log(alpha) : std::log(1.0 - alpha);
            log_b += e.label == 1 ? std::log(1.0 - beta) : std::log(beta);
        }
        const double hg = std::clamp(h[g], 0.0, 1.0);
        const double lp = hg > 0.0 ? log_a + std::log(hg) : neg_inf;
        const double ln = hg < 1.0 ? log_b + std::log(1.0 - hg) : neg_inf;
        double term;
        if (lp == neg_inf && ln == neg_inf) {
            term = neg_inf;
        } else {
            const double m = std::max(lp, ln);
            term = m + std::log(std::exp(lp - m) + std::exp(ln - m));
        }
        total += term;
        if (!(total > kLogLikelihoodSentinel)) return kLogLikelihoodSentinel;
    }
    return total;
}

CrowdEmResult crowd_em(const SurveyMatrix& surveys, const ContentSchema& schema,
                       const CrowdEmConfig& config, std::uint64_t /*seed*/) {
    surveys.validate();
    const auto by_game = surveys.entries_by_game();
    for (std::size_t g = 0; g < surveys.games.size(); ++g) {
        if (by_game[g].empty()) {
            throw DegenerateDataError("every game needs at least one survey entry");
        }
    }

    const std::size_t n = surveys.games.size();
    std::vector<std::vector<double>> features(n);
    for (std::size_t g = 0; g < n; ++g) {
        features[g] = normalize(surveys.games[g], schema);
    }

    CrowdEmResult result;
    result.reliability.alpha.assign(surveys.player_count, 0.5);
    result.reliability.beta.assign(surveys.player_count, 0.5);

    // gamma(0) = per-game label mean
    std::vector<double> gamma0(n, 0.0);
    for (std::size_t g = 0; g < n; ++g) {
        double sum = 0.0;
        for (int ei : by_game[g]) sum += surveys.entries[ei].label;
        gamma0[g] = sum / static_cast<double>(by_game[g].size());
    }

    auto fit_regressor = [&](const std::vector<double>& targets) {
        Dataset data;
        data.task = Task::Regression;
        data.inputs = features;
        data.targets = targets;
        return KernelRidge::fit(data, config.bandwidth, config.ridge);
    };
    result.regressor = fit_regressor(gamma0);

    const double lo = config.reliability_clamp;
    auto clamp_reliability = [&](AnnotatorReliability& r) {
        for (double& v : r.alpha) v = std::clamp(v, lo, 1.0 - lo);
        for (double& v : r.beta) v = std::clamp(v, lo, 1.0 - lo);
    };

    double prev_ll = kLogLikelihoodSentinel;
    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        std::vector<double> h(n);
        for (std::size_t g = 0; g < n; ++g) {
            h[g] = result.regressor.predict(features[g]);
        }
        result.consensus = e_step(surveys, result.reliability, h);
        for (bool flag : result.consensus.degenerate) {
            if (flag) ++result.warnings;
        }
        result.reliability =
            m_step(surveys, result.consensus, result.reliability);
        clamp_reliability(result.reliability);

        const double ll = log_likelihood(surveys, result.reliability, h);
        result.epoch_log_likelihood.push_back(ll);

        if (config.refit_regressor) {
            result.regressor = fit_regressor(result.consensus.gamma);
        }
        if (epoch > 0 && std::abs(ll - prev_ll) <= config.tol) break;
        prev_ll = ll;
    }
    return result;
}

double predict_popularity(const KernelRidge& regressor, const ContentVector& g,
                          const ContentSchema& schema) {
    return regressor.predict(normalize(g, schema));
}

}  // namespace lbpcg
