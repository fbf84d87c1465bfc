#include "lbpcg/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lbpcg/rng.hpp"

namespace lbpcg {

WorldModel::WorldModel(ContentSchema schema, FeatureSchema features,
                       WorldConfig config)
    : schema_(std::move(schema)),
      features_(std::move(features)),
      config_(config) {
    const std::size_t d = schema_.dim_count();

    Rng accept_rng(derive_seed(config_.seed, 1));
    accept_weights_.resize(d);
    double weight_sum = 0.0, abs_sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        accept_weights_[i] = accept_rng.uniform(-1.0, 1.0);
        weight_sum += accept_weights_[i];
        abs_sum += std::abs(accept_weights_[i]);
    }
    accept_threshold_ = 0.5 * weight_sum + config_.accept_offset * abs_sum;

    // two planted forbidden pairs on the first four dimensions
    if (d >= 4) {
        forbidden_.push_back({1, schema_.cardinality(1) - 1, 3, 0});
        forbidden_.push_back({0, schema_.cardinality(0) - 1, 2, 0});
    }

    // challenge dimensions: every dimension except the "easing" ones (2, 3)
    for (std::size_t i = 0; i < d; ++i) {
        if (i == 2 || i == 3) continue;
        challenge_dims_.push_back(static_cast<int>(i));
        challenge_weights_.push_back(i == 0 ? 1.5 : (i == 1 ? 2.0 : 0.5));
    }
    challenge_max_ =
        std::accumulate(challenge_weights_.begin(), challenge_weights_.end(), 0.0);

    Rng playlog_rng(derive_seed(config_.seed, 2));
    playlog_map_.resize(config_.playlog_dims);
    playlog_bias_.resize(config_.playlog_dims);
    for (int j = 0; j < config_.playlog_dims; ++j) {
        auto& row = playlog_map_[j];
        row.resize(d + 2);
        // performance rows model outcome telemetry (deaths, completion, ...),
        // which in real play-logs reflects how the game's challenge relates
        // to the player's skill rather than either one alone
        const bool performance_row = j < config_.playlog_dims / 4;
        for (std::size_t i = 0; i < d; ++i) {
            row[i] = playlog_rng.uniform(-1.0, 1.0) * (performance_row ? 0.3 : 1.0);
        }
        row[d] = playlog_rng.uniform(-1.0, 1.0);                // skill
        row[d + 1] = playlog_rng.uniform(-1.0, 1.0) *
                     (performance_row ? 3.0 : 0.0);             // skill-challenge gap
        playlog_bias_[j] = playlog_rng.uniform(-1.0, 1.0);
    }
}

int WorldModel::oracle_acceptability(const ContentVector& g) const {
    require_valid(g, schema_);
    for (const auto& f : forbidden_) {
        if (g.values[f.dim_a] == f.value_a && g.values[f.dim_b] == f.value_b) {
            return -1;
        }
    }
    const auto x = normalize(g, schema_);
    double score = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) score += accept_weights_[i] * x[i];
    return score >= accept_threshold_ ? 1 : -1;
}

double WorldModel::challenge01(const ContentVector& g) const {
    const auto x = normalize(g, schema_);
    double score = 0.0;
    for (std::size_t k = 0; k < challenge_dims_.size(); ++k) {
        score += challenge_weights_[k] * x[challenge_dims_[k]];
    }
    return score / challenge_max_;
}

int WorldModel::difficulty_band(const ContentVector& g) const {
    require_valid(g, schema_);
    const int bands = features_.domain_size(0);
    const int band = static_cast<int>(challenge01(g) * bands);
    return std::clamp(band, 0, bands - 1);
}

FeatureVector WorldModel::oracle_feature(const ContentVector& g) const {
    // defined for every valid game: the acceptability filter upstream is a
    // learned approximation, so the annotator will see some false positives
    require_valid(g, schema_);
    return FeatureVector{{difficulty_band(g)}};
}

int WorldModel::band_from_skill(double skill) const {
    const int bands = features_.domain_size(0);
    return std::clamp(static_cast<int>(skill * bands), 0, bands - 1);
}

int WorldModel::true_enjoyment(const std::vector<int>& preferred,
                               const ContentVector& g) const {
    const int band = difficulty_band(g);
    int min_dist = 1 << 20;
    for (int p : preferred) min_dist = std::min(min_dist, std::abs(band - p));
    if (min_dist == 0) return 1;
    if (min_dist == 1) {
        // deterministic per (preference set, game): all players sharing a
        // preference agree on adjacent-band games
        std::uint64_t h = fnv1a(g.values.data(), g.values.size() * sizeof(int),
                                config_.seed ^ 0x5bd1e995u);
        for (int p : preferred) h = fnv1a(&p, sizeof(int), h);
        Rng coin(h);
        return coin.uniform() < config_.adjacent_enjoy_prob ? 1 : 0;
    }
    return 0;
}

std::vector<double> WorldModel::noiseless_playlog(const ContentVector& g,
                                                  double skill) const {
    const auto x = normalize(g, schema_);
    const double gap = skill - challenge01(g);
    std::vector<double> log(config_.playlog_dims);
    for (int j = 0; j < config_.playlog_dims; ++j) {
        double v = playlog_bias_[j];
        for (std::size_t i = 0; i < x.size(); ++i) v += playlog_map_[j][i] * x[i];
        v += playlog_map_[j][x.size()] * skill;
        v += playlog_map_[j][x.size() + 1] * gap;
        log[j] = v;
    }
    return log;
}

PlayOutcome WorldModel::play(const SimulatedPlayer& player,
                             const ContentVector& g, std::uint64_t seed,
                             int game_index) const {
    require_valid(g, schema_);
    PlayOutcome out;
    out.true_enjoyment = true_enjoyment(player.preferred_at(game_index), g);

    Rng rng(seed);
    if (out.true_enjoyment == 1) {
        out.reported_feedback = rng.uniform() < player.alpha_star ? 1 : 0;
    } else {
        out.reported_feedback = rng.uniform() < player.beta_star ? 0 : 1;
    }

    const double base = out.true_enjoyment ? 3.2 : 1.0;
    out.rating = std::clamp(
        static_cast<int>(std::lround(base + 0.7 * rng.normal())), 0, 4);

    const double sigma =
        player.playlog_sigma >= 0.0 ? player.playlog_sigma : config_.playlog_sigma;
    out.playlog = noiseless_playlog(g, player.skill_at(game_index));
    if (sigma > 0.0) {
        for (double& v : out.playlog) v += sigma * rng.normal();
    }
    return out;
}

BetaCohort generate_beta_cohort(const WorldModel& world,
                                const std::vector<ContentVector>& beta_games,
                                const BetaCohortConfig& config,
                                std::uint64_t seed) {
    if (beta_games.empty()) throw ConfigError("beta game set is empty");
    if (config.plays_min < 1 || config.plays_max < config.plays_min) {
        throw ConfigError("invalid plays-per-player range");
    }

    BetaCohort cohort;
    cohort.surveys.games = beta_games;
    cohort.surveys.player_count = config.players;

    for (int p = 0; p < config.players; ++p) {
        Rng rng(derive_seed(seed, p));
        SimulatedPlayer player;
        player.id = p;
        player.skill = rng.uniform();
        player.alpha_star = rng.uniform(config.reliability_lo, config.reliability_hi);
        player.beta_star = rng.uniform(config.reliability_lo, config.reliability_hi);
        player.preferred = config.preference_mode == PreferenceMode::Shared
                               ? config.shared_preferred
                               : std::vector<int>{world.band_from_skill(player.skill)};

        const int span = config.plays_max - config.plays_min + 1;
        const int plays = std::min<int>(
            config.plays_min + static_cast<int>(rng.below(span)),
            static_cast<int>(beta_games.size()));

        std::vector<int> game_idx(beta_games.size());
        std::iota(game_idx.begin(), game_idx.end(), 0);
        rng.shuffle(game_idx);

        for (int k = 0; k < plays; ++k) {
            const int gi = game_idx[k];
            const PlayOutcome outcome =
                world.play(player, beta_games[gi], rng.next());

            SurveyMatrix::Entry entry;
            entry.game = gi;
            entry.player = p;
            entry.label = outcome.reported_feedback;
            entry.rating = outcome.rating;
            cohort.surveys.entries.push_back(entry);

            PdcExample example;
            example.playlog = outcome.playlog;
            example.features = FeatureVector{{world.difficulty_band(beta_games[gi])}};
            example.target = outcome.reported_feedback;
            example.player = p;
            cohort.examples.push_back(std::move(example));
        }
        cohort.plants.push_back(std::move(player));
    }

    // every beta game needs at least one survey; cover any gaps round-robin
    std::vector<bool> covered(beta_games.size(), false);
    for (const auto& e : cohort.surveys.entries) covered[e.game] = true;
    for (std::size_t gi = 0; gi < beta_games.size(); ++gi) {
        if (covered[gi]) continue;
        const int p = static_cast<int>(gi) % config.players;
        const PlayOutcome outcome = world.play(
            cohort.plants[p], beta_games[gi], derive_seed(seed, 900000 + gi));
        SurveyMatrix::Entry entry;
        entry.game = static_cast<int>(gi);
        entry.player = p;
        entry.label = outcome.reported_feedback;
        entry.rating = outcome.rating;
        cohort.surveys.entries.push_back(entry);
        PdcExample example;
        example.playlog = outcome.playlog;
        example.features = FeatureVector{{world.difficulty_band(beta_games[gi])}};
        example.target = outcome.reported_feedback;
        example.player = p;
        cohort.examples.push_back(std::move(example));
    }
    return cohort;
}

}  // namespace lbpcg
