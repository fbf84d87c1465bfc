#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lbpcg/content.hpp"
#include "lbpcg/learners.hpp"

namespace lbpcg {

// Sparse beta-test feedback matrix: one entry per (game, player) play event.
struct SurveyMatrix {
    std::vector<ContentVector> games;
    struct Entry {
        int game = 0;
        int player = 0;
        int label = 0;   // binary feedback y in {0,1}
        int rating = 2;  // 5-point answer, recorded but unused by learning
    };
    std::vector<Entry> entries;
    int player_count = 0;

    void validate() const;
    std::vector<std::vector<int>> entries_by_game() const;
    std::vector<std::vector<int>> entries_by_player() const;
};

struct AnnotatorReliability {
    std::vector<double> alpha;  // sensitivity per player
    std::vector<double> beta;   // specificity per player
};

struct ConsensusEstimate {
    std::vector<double> gamma;
    std::vector<double> a;  // positive-branch likelihood product
    std::vector<double> b;  // negative-branch likelihood product
    std::vector<double> h;  // regressor prior per game
    std::vector<bool> degenerate;  // gamma fell back to h
};

// E-step with a precomputed prior h_n per game; products run in log space.
ConsensusEstimate e_step(const SurveyMatrix& surveys,
                         const AnnotatorReliability& reliability,
                         std::span<const double> h);

ConsensusEstimate e_step(const SurveyMatrix& surveys,
                         const AnnotatorReliability& reliability,
                         const KernelRidge& regressor,
                         const ContentSchema& schema);

// M-step; players with a zero denominator keep their previous value.
AnnotatorReliability m_step(const SurveyMatrix& surveys,
                            const ConsensusEstimate& consensus,
                            const AnnotatorReliability& previous);

// Two-coin mixture log-likelihood; -inf terms are capped at the sentinel.
inline constexpr double kLogLikelihoodSentinel = -1e300;
double log_likelihood(const SurveyMatrix& surveys,
                      const AnnotatorReliability& reliability,
                      std::span<const double> h);

struct CrowdEmConfig {
    int max_epochs = 50;
    double tol = 1e-5;
    double bandwidth = 0.5;
    double ridge = 1e-3;
    bool refit_regressor = true;
    double reliability_clamp = 1e-6;
};

struct CrowdEmResult {
    ConsensusEstimate consensus;
    AnnotatorReliability reliability;
    KernelRidge regressor;
    std::vector<double> epoch_log_likelihood;
    int warnings = 0;
};

// Full Crowd-EM loop: alpha=beta=0.5 init, gamma(0)=label mean per game,
// regressor pre-trained on (game, gamma(0)), then E/M/refit epochs until
// |delta log-likelihood| <= tol or max_epochs.
CrowdEmResult crowd_em(const SurveyMatrix& surveys, const ContentSchema& schema,
                       const CrowdEmConfig& config, std::uint64_t seed);

double predict_popularity(const KernelRidge& regressor, const ContentVector& g,
                          const ContentSchema& schema);

}  // namespace lbpcg
