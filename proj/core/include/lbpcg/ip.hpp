#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lbpcg/content.hpp"
#include "lbpcg/pdc.hpp"
#include "lbpcg/simworld.hpp"

namespace lbpcg {

enum class IpStateKind { Categorize, Produce, Generalize };
const char* to_string(IpStateKind k);

struct IpState {
    IpStateKind kind = IpStateKind::Categorize;
    int category = -1;  // valid only in Produce

    friend bool operator==(const IpState&, const IpState&) = default;
};

struct IpConfig {
    int window = 5;       // W: per-category sliding window of decisions
    int consistency = 2;  // k: positives (with zero negatives) to commit
    int budget = 15;      // B: categorize attempts before Generalize
    int drift_run = 3;    // d: consecutive Produce negatives to re-categorize
    double generalize_quantile = 0.2;  // q: top gamma fraction served

    void validate() const;
};

// Everything the online controller consumes from the offline models.
struct IpAssets {
    std::vector<ContentVector> beta_games;
    std::vector<int> beta_category;
    std::vector<double> beta_gamma;  // GPE consensus per beta game
    ContentSubspace gac;             // ConfidentAcceptable with categories
    std::vector<double> gac_gamma;   // predicted popularity per gac member
    int num_categories = 5;

    void validate() const;
};

struct SessionEvent {
    int game_index = -1;  // into beta_games or gac.members
    bool from_beta = false;
    int category = -1;
    IpStateKind state_before = IpStateKind::Categorize;
    IpStateKind state_after = IpStateKind::Categorize;
    Decision decision = Decision::Rejected;
    double score = 0.0;
};

struct PlayerSession {
    IpState state;
    std::vector<SessionEvent> history;
    int categorize_attempts = 0;
    std::vector<char> beta_served;       // never re-served
    std::vector<char> gac_served_phase;  // reset on entering Produce
    int round_robin_cursor = 0;
    std::uint64_t rng_state = 0;
    // game served by the last next_game() call, awaiting observe()
    int pending_index = -1;
    bool pending_from_beta = false;
    int pending_category = -1;

    bool awaiting_observe() const { return pending_index >= 0; }
};

PlayerSession make_session(const IpAssets& assets, std::uint64_t seed);

// Serves the next game per the current state: Categorize cycles categories
// round-robin serving each category's unserved gamma-max beta game; Produce
// samples unserved G_ac games of the committed category; Generalize serves
// unserved G_ac games from the top-q predicted-gamma quantile.
ContentVector next_game(PlayerSession& session, const IpAssets& assets,
                        const IpConfig& config);

// Consumes the play-log of the last served game, runs the PDC decision and
// applies the state-transition rules. Rejected decisions are neutral: they
// neither confirm a category nor count toward drift.
void observe(PlayerSession& session, std::span<const double> playlog,
             const PreferenceEnsemble& pdc, const IpConfig& config);

struct TranscriptRecord {
    int index = 0;
    ContentVector game;
    int category = -1;
    IpStateKind state_before = IpStateKind::Categorize;
    IpStateKind state_after = IpStateKind::Categorize;
    Decision decision = Decision::Rejected;
    double score = 0.0;
    int reported_feedback = 0;
    int true_enjoyment = 0;
};

struct SessionTranscript {
    IpConfig config;
    std::vector<TranscriptRecord> records;

    void write_csv(const std::filesystem::path& path) const;
};

// Alternates next_game / simulated play / observe for n_games.
SessionTranscript run_session(const WorldModel& world,
                              const SimulatedPlayer& player,
                              const IpAssets& assets,
                              const PreferenceEnsemble& pdc,
                              const IpConfig& config, int n_games,
                              std::uint64_t seed);

}  // namespace lbpcg
