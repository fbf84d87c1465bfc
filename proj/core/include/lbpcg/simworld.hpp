#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lbpcg/content.hpp"
#include "lbpcg/gpe.hpp"
#include "lbpcg/pdc.hpp"

namespace lbpcg {

// A pair of (dimension, value) settings that together make a game unacceptable.
struct ForbiddenCombination {
    int dim_a = 0;
    int value_a = 0;
    int dim_b = 0;
    int value_b = 0;
};

struct WorldConfig {
    std::uint64_t seed = 1;
    double accept_offset = 0.05;     // shifts the acceptability threshold
    int playlog_dims = 122;
    double playlog_sigma = 0.05;
    double adjacent_enjoy_prob = 0.25;
};

struct SimulatedPlayer {
    int id = 0;
    double skill = 0.5;
    std::vector<int> preferred;  // enjoyed difficulty bands, non-empty
    double alpha_star = 1.0;     // planted sensitivity
    double beta_star = 1.0;      // planted specificity
    // optional concept drift: at game index `at_game` the player switches to
    // `new_skill` / `new_preferred`
    std::optional<int> drift_at;
    double drift_skill = 0.5;
    std::vector<int> drift_preferred;
    double playlog_sigma = -1.0;  // <0 means use the world default

    double skill_at(int game_index) const {
        return (drift_at && game_index >= *drift_at) ? drift_skill : skill;
    }
    const std::vector<int>& preferred_at(int game_index) const {
        return (drift_at && game_index >= *drift_at) ? drift_preferred : preferred;
    }
};

struct PlayOutcome {
    std::vector<double> playlog;
    int true_enjoyment = 0;
    int reported_feedback = 0;
    int rating = 2;  // 5-point answer, recorded for format fidelity only
};

// Deterministic synthetic ground truth standing in for human data collection:
// a planted acceptability rule, a monotone difficulty rule quantized into five
// bands, and an affine play-log map over (game, skill).
class WorldModel {
public:
    WorldModel(ContentSchema schema, FeatureSchema features, WorldConfig config);

    int oracle_acceptability(const ContentVector& g) const;  // +1 / -1
    int difficulty_band(const ContentVector& g) const;       // 0..4
    FeatureVector oracle_feature(const ContentVector& g) const;

    // enjoyment is deterministic per (preference set, game); feedback flips
    // and play-log noise draw from `seed`
    PlayOutcome play(const SimulatedPlayer& player, const ContentVector& g,
                     std::uint64_t seed, int game_index = 0) const;

    std::vector<double> noiseless_playlog(const ContentVector& g,
                                          double skill) const;

    const ContentSchema& schema() const { return schema_; }
    const FeatureSchema& feature_schema() const { return features_; }
    const WorldConfig& config() const { return config_; }
    int band_from_skill(double skill) const;

private:
    int true_enjoyment(const std::vector<int>& preferred,
                       const ContentVector& g) const;
    double challenge01(const ContentVector& g) const;  // pre-quantized difficulty

    ContentSchema schema_;
    FeatureSchema features_;
    WorldConfig config_;
    std::vector<double> accept_weights_;
    double accept_threshold_ = 0.0;
    std::vector<ForbiddenCombination> forbidden_;
    std::vector<int> challenge_dims_;
    std::vector<double> challenge_weights_;
    double challenge_max_ = 1.0;
    std::vector<std::vector<double>> playlog_map_;  // L x (D+2)
    std::vector<double> playlog_bias_;
};

enum class PreferenceMode {
    Shared,        // all beta players share one preferred-band set
    SkillDerived,  // each player prefers the band matching their skill
};

struct BetaCohortConfig {
    int players = 140;
    int plays_min = 4;
    int plays_max = 9;
    double reliability_lo = 0.55;
    double reliability_hi = 0.95;
    PreferenceMode preference_mode = PreferenceMode::SkillDerived;
    std::vector<int> shared_preferred = {1, 2};
};

struct BetaCohort {
    SurveyMatrix surveys;
    std::vector<PdcExample> examples;      // one per survey entry
    std::vector<SimulatedPlayer> plants;   // hidden ground truth
};

// Simulated public beta test over a chosen game set: every player plays a
// random subset of beta games; emits surveys, play-logs and the planted
// reliabilities for recovery tests.
BetaCohort generate_beta_cohort(const WorldModel& world,
                                const std::vector<ContentVector>& beta_games,
                                const BetaCohortConfig& config,
                                std::uint64_t seed);

}  // namespace lbpcg
