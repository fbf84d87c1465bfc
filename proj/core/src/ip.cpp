#include "lbpcg/ip.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "lbpcg/rng.hpp"

namespace lbpcg {

const char* to_string(IpStateKind k) {
    switch (k) {
        case IpStateKind::Categorize: return "categorize";
        case IpStateKind::Produce: return "produce";
        case IpStateKind::Generalize: return "generalize";
    }
    return "unknown";
}

void IpConfig::validate() const {
    if (consistency > window) throw ConfigError("ip: consistency k must be <= window W");
    if (budget < consistency) throw ConfigError("ip: budget B must be >= k");
    if (drift_run < 1) throw ConfigError("ip: drift run-length must be >= 1");
    if (generalize_quantile <= 0.0 || generalize_quantile >= 1.0) {
        throw ConfigError("ip: generalize quantile must lie in (0,1)");
    }
}

void IpAssets::validate() const {
    if (beta_games.size() != beta_category.size() ||
        beta_games.size() != beta_gamma.size()) {
        throw ContractError("ip assets: beta arrays differ in length");
    }
    gac.validate();
    if (gac.categories.size() != gac.members.size()) {
        throw ContractError("ip assets: G_ac lacks category annotations");
    }
    if (gac_gamma.size() != gac.members.size()) {
        throw ContractError("ip assets: popularity predictions missing");
    }
}

PlayerSession make_session(const IpAssets& assets, std::uint64_t seed) {
    assets.validate();
    PlayerSession s;
    s.beta_served.assign(assets.beta_games.size(), 0);
    s.gac_served_phase.assign(assets.gac.members.size(), 0);
    s.rng_state = seed;
    return s;
}

namespace {

// Per-category decision tallies over the category's last `window` decisions.
// The scan stops at the most recent Produce-phase event: after a drift sends
// the controller back to Categorize, detection restarts from fresh evidence
// rather than being vetoed by stale pre-drift decisions.
struct Tally {
    int positives = 0;
    int negatives = 0;
};

Tally category_window(const PlayerSession& session, int category, int window) {
    Tally t;
    int seen = 0;
    for (auto it = session.history.rbegin();
         it != session.history.rend() && seen < window; ++it) {
        if (it->state_before == IpStateKind::Produce) break;
        if (it->category != category) continue;
        ++seen;
        if (it->decision == Decision::Positive) ++t.positives;
        if (it->decision == Decision::Negative) ++t.negatives;
    }
    return t;
}

// Consecutive trailing Negatives in the current Produce phase, skipping
// Rejected decisions; any Positive or a state boundary ends the run.
int trailing_negative_run(const PlayerSession& session) {
    int run = 0;
    for (auto it = session.history.rbegin(); it != session.history.rend(); ++it) {
        if (it->state_before != IpStateKind::Produce) break;
        if (it->decision == Decision::Rejected) continue;
        if (it->decision == Decision::Negative) {
            ++run;
        } else {
            break;
        }
    }
    return run;
}

int serve_categorize(PlayerSession& session, const IpAssets& assets) {
    const int categories = assets.num_categories;
    // descending-gamma order per category, computed on demand
    for (int attempt = 0; attempt < categories; ++attempt) {
        const int category = (session.round_robin_cursor + attempt) % categories;
        int best = -1;
        double best_gamma = -1.0;
        for (std::size_t i = 0; i < assets.beta_games.size(); ++i) {
            if (session.beta_served[i] || assets.beta_category[i] != category) {
                continue;
            }
            if (assets.beta_gamma[i] > best_gamma) {
                best_gamma = assets.beta_gamma[i];
                best = static_cast<int>(i);
            }
        }
        if (best >= 0) {
            session.round_robin_cursor =
                (session.round_robin_cursor + attempt + 1) % categories;
            return best;
        }
    }
    throw PoolExhaustedError("categorize: beta pool exhausted");
}

int serve_produce(PlayerSession& session, const IpAssets& assets) {
    std::vector<int> open;
    for (std::size_t i = 0; i < assets.gac.members.size(); ++i) {
        if (!session.gac_served_phase[i] &&
            assets.gac.categories[i] == session.state.category) {
            open.push_back(static_cast<int>(i));
        }
    }
    if (open.empty()) throw PoolExhaustedError("produce: G_ac category exhausted");
    Rng rng(session.rng_state);
    const int pick = open[rng.below(open.size())];
    session.rng_state = rng.state();
    return pick;
}

int serve_generalize(PlayerSession& session, const IpAssets& assets,
                     const IpConfig& config) {
    // quantile cutoff: the top floor(q*n) games by predicted gamma, min 1
    std::vector<double> sorted = assets.gac_gamma;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::size_t top = std::max<std::size_t>(
        1, static_cast<std::size_t>(config.generalize_quantile * sorted.size()));
    const double cutoff = sorted[std::min(top, sorted.size()) - 1];

    int best = -1;
    double best_gamma = -1.0;
    for (std::size_t i = 0; i < assets.gac.members.size(); ++i) {
        if (session.gac_served_phase[i]) continue;
        if (assets.gac_gamma[i] < cutoff) continue;
        if (assets.gac_gamma[i] > best_gamma) {
            best_gamma = assets.gac_gamma[i];
            best = static_cast<int>(i);
        }
    }
    if (best < 0) throw PoolExhaustedError("generalize: G_ac quantile exhausted");
    return best;
}

}  // namespace

ContentVector next_game(PlayerSession& session, const IpAssets& assets,
                        const IpConfig& config) {
    config.validate();
    assets.validate();
    if (session.awaiting_observe()) {
        throw ContractError("next_game called before observing the last game");
    }

    int index = -1;
    bool from_beta = false;
    switch (session.state.kind) {
        case IpStateKind::Categorize:
            index = serve_categorize(session, assets);
            from_beta = true;
            break;
        case IpStateKind::Produce:
            index = serve_produce(session, assets);
            break;
        case IpStateKind::Generalize:
            index = serve_generalize(session, assets, config);
            break;
    }

    session.pending_index = index;
    session.pending_from_beta = from_beta;
    if (from_beta) {
        session.beta_served[index] = 1;
        session.pending_category = assets.beta_category[index];
        return assets.beta_games[index];
    }
    session.gac_served_phase[index] = 1;
    session.pending_category = assets.gac.categories[index];
    return assets.gac.members[index];
}

void observe(PlayerSession& session, std::span<const double> playlog,
             const PreferenceEnsemble& pdc, const IpConfig& config) {
    if (!session.awaiting_observe()) {
        throw ContractError("observe called without a pending game");
    }

    FeatureVector features{{session.pending_category}};
    const auto [decision, score] = predict_preference(pdc, playlog, features);

    SessionEvent event;
    event.game_index = session.pending_index;
    event.from_beta = session.pending_from_beta;
    event.category = session.pending_category;
    event.state_before = session.state.kind;
    event.decision = decision;
    event.score = score;
    session.history.push_back(event);
    session.pending_index = -1;

    const int category = event.category;
    switch (event.state_before) {
        case IpStateKind::Categorize: {
            ++session.categorize_attempts;
            const Tally t = category_window(session, category, config.window);
            if (t.positives >= config.consistency && t.negatives == 0) {
                session.state = {IpStateKind::Produce, category};
                std::fill(session.gac_served_phase.begin(),
                          session.gac_served_phase.end(), 0);
            } else if (session.categorize_attempts >= config.budget) {
                session.state = {IpStateKind::Generalize, -1};
            }
            break;
        }
        case IpStateKind::Produce: {
            if (trailing_negative_run(session) >= config.drift_run) {
                session.state = {IpStateKind::Categorize, -1};
                session.categorize_attempts = 0;
            }
            break;
        }
        case IpStateKind::Generalize: {
            const Tally t = category_window(session, category, config.window);
            if (t.positives >= config.consistency && t.negatives == 0) {
                session.state = {IpStateKind::Produce, category};
                std::fill(session.gac_served_phase.begin(),
                          session.gac_served_phase.end(), 0);
            }
            break;
        }
    }
    session.history.back().state_after = session.state.kind;
}

void SessionTranscript::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << "index,game,category,state_before,state_after,decision,score,"
           "reported_feedback,true_enjoyment\n";
    for (const auto& r : records) {
        out << r.index << ',';
        for (std::size_t i = 0; i < r.game.values.size(); ++i) {
            out << (i ? ";" : "") << r.game.values[i];
        }
        out << ',' << r.category << ',' << to_string(r.state_before) << ','
            << to_string(r.state_after) << ',' << to_string(r.decision) << ','
            << r.score << ',' << r.reported_feedback << ',' << r.true_enjoyment
            << '\n';
    }
}

SessionTranscript run_session(const WorldModel& world,
                              const SimulatedPlayer& player,
                              const IpAssets& assets,
                              const PreferenceEnsemble& pdc,
                              const IpConfig& config, int n_games,
                              std::uint64_t seed) {
    PlayerSession session = make_session(assets, derive_seed(seed, 1));
    SessionTranscript transcript;
    transcript.config = config;

    for (int i = 0; i < n_games; ++i) {
        const ContentVector g = next_game(session, assets, config);
        const PlayOutcome outcome =
            world.play(player, g, derive_seed(seed, 100 + i), i);
        observe(session, outcome.playlog, pdc, config);

        const SessionEvent& event = session.history.back();
        TranscriptRecord record;
        record.index = i;
        record.game = g;
        record.category = event.category;
        record.state_before = event.state_before;
        record.state_after = event.state_after;
        record.decision = event.decision;
        record.score = event.score;
        record.reported_feedback = outcome.reported_feedback;
        record.true_enjoyment = outcome.true_enjoyment;
        transcript.records.push_back(std::move(record));
    }
    return transcript;
}

}  // namespace lbpcg
