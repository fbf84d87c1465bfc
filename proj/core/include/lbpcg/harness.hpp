#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lbpcg/cc.hpp"
#include "lbpcg/clustering.hpp"
#include "lbpcg/content.hpp"
#include "lbpcg/gpe.hpp"
#include "lbpcg/icq.hpp"
#include "lbpcg/ip.hpp"
#include "lbpcg/pdc.hpp"
#include "lbpcg/simworld.hpp"

namespace lbpcg {

// Flat dotted-key configuration text: `key.subkey = value`, '#' comments.
struct KeyValueConfig {
    std::map<std::string, std::string> values;

    static KeyValueConfig parse_file(const std::filesystem::path& path);
    static KeyValueConfig parse_string(const std::string& text);
    void apply_override(const std::string& key_equals_value);

    bool has(const std::string& key) const { return values.count(key) > 0; }
    std::string get_string(const std::string& key, const std::string& def) const;
    int get_int(const std::string& key, int def) const;
    double get_double(const std::string& key, double def) const;
    bool get_bool(const std::string& key, bool def) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t def) const;
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& def) const;
    std::vector<int> get_int_list(const std::string& key,
                                  const std::vector<int>& def) const;
};

struct PipelineConfig {
    ContentSchema schema = ContentSchema::default_schema();
    FeatureSchema features = FeatureSchema::default_difficulty();
    std::uint64_t seed = 42;
    std::filesystem::path out_dir = "out";

    WorldConfig world;

    int cluster_k = 200;
    int sample_per_cluster = 100;
    int cluster_subsample = 20000;
    bool cluster_full_space = false;
    int cluster_max_iters = 30;

    IcqConfig icq;
    CcConfig cc;
    int cc_min_per_category = 20;
    double cc_confidence_threshold = 0.0;

    int beta_games = 100;
    int beta_per_category = 20;
    BetaCohortConfig beta;

    CrowdEmConfig gpe;

    std::vector<double> pdc_alpha_thresholds = {0.0, 0.3, 0.6, 0.9};
    std::vector<double> pdc_beta_thresholds = {0.0, 0.3, 0.6, 0.9};
    PdcTrainConfig pdc;
    double pdc_self_disagreement_bound = 0.5;

    IpConfig ip;

    int eval_players = 20;
    int eval_games_per_model = 10;

    static PipelineConfig defaults();
    static PipelineConfig from_kv(const KeyValueConfig& kv);
    void validate() const;
};

// One played game attributed to a serving model: its (true) difficulty
// category and the player's binary feedback.
struct ModelPlay {
    int category = 0;
    int feedback = 0;
};

struct PlayerEvaluation {
    int player = 0;
    std::map<std::string, std::vector<ModelPlay>> plays_by_model;
};

struct EvaluationReport {
    struct PlayerScore {
        int player = 0;
        std::vector<double> preference_rate;       // rho_{p,c}
        std::vector<bool> rate_defined;            // N_{p,c} > 0
        std::map<std::string, double> model_score;  // S_{m,p}
    };
    std::vector<PlayerScore> players;
    std::map<std::string, double> mean_score;

    void write_csv(const std::filesystem::path& path) const;
};

// S_{m,p} = sum_c rho_{p,c} * N_{m,p,c} with rho pooled over all models'
// feedback; categories with no plays contribute 0 and are flagged.
EvaluationReport score_models(const std::vector<PlayerEvaluation>& evaluations,
                              int num_categories);

// Even split across categories (remainder round-robin) from the beta set;
// returns beta game indices.
std::vector<int> baseline_balanced(const std::vector<int>& beta_categories,
                                   int n, int num_categories,
                                   std::uint64_t seed);

// Uniform draws over the full schema space, no filtering.
std::vector<ContentVector> baseline_random(const ContentSchema& schema, int n,
                                           std::uint64_t seed);

// Players whose repeated-game self-disagreement rate exceeds `bound` are
// dropped from PDC training (returns the retained player mask).
std::vector<bool> reliable_player_mask(const SurveyMatrix& surveys,
                                       double bound);

enum class Stage { Cluster, Icq, Cc, Beta, Gpe, Pdc, Ip, Evaluate };
Stage stage_from_string(const std::string& name);
const char* to_string(Stage stage);

// Runs one pipeline stage, reading upstream artifacts from (and writing its
// own into) config.out_dir. Missing upstream artifacts raise DependencyError.
void run_stage(Stage stage, const PipelineConfig& config);

// All stages in dependency order.
void run_pipeline(const PipelineConfig& config);

}  // namespace lbpcg
