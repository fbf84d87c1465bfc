#include "lbpcg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lbpcg/rng.hpp"
#include "lbpcg/serialize.hpp"

namespace lbpcg {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
    KeyValueConfig kv;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": empty key");
        }
        kv.values[key] = value;
    }
    return kv;
}

KeyValueConfig KeyValueConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

void KeyValueConfig::apply_override(const std::string& key_equals_value) {
    const auto eq = key_equals_value.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override must look like key=value: " +
                          key_equals_value);
    }
    values[trim(key_equals_value.substr(0, eq))] =
        trim(key_equals_value.substr(eq + 1));
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& def) const {
    const auto it = values.find(key);
    return it == values.end() ? def : it->second;
}

int KeyValueConfig::get_int(const std::string& key, int def) const {
    const auto it = values.find(key);
    if (it == values.end()) return def;
    try {
        std::size_t pos = 0;
        const int v = std::stoi(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': not an integer: " + it->second);
    }
}

double KeyValueConfig::get_double(const std::string& key, double def) const {
    const auto it = values.find(key);
    if (it == values.end()) return def;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': not a number: " + it->second);
    }
}

bool KeyValueConfig::get_bool(const std::string& key, bool def) const {
    const auto it = values.find(key);
    if (it == values.end()) return def;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("key '" + key + "': not a boolean: " + it->second);
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key,
                                      std::uint64_t def) const {
    const auto it = values.find(key);
    if (it == values.end()) return def;
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': not an unsigned integer: " +
                          it->second);
    }
}

std::vector<double> KeyValueConfig::get_double_list(
    const std::string& key, const std::vector<double>& def) const {
    const auto it = values.find(key);
    if (it == values.end()) return def;
    std::vector<double> out;
    for (const auto& part : split(it->second, ',')) {
        const std::string p = trim(part);
        if (p.empty()) continue;
        try {
            out.push_back(std::stod(p));
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "': bad list element: " + p);
        }
    }
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key,
                                              const std::vector<int>& def) const {
    const auto it = values.find(key);
    if (it == values.end()) return def;
    std::vector<int> out;
    for (const auto& part : split(it->second, ',')) {
        const std::string p = trim(part);
        if (p.empty()) continue;
        try {
            out.push_back(std::stoi(p));
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "': bad list element: " + p);
        }
    }
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
}

PipelineConfig PipelineConfig::defaults() { return PipelineConfig{}; }

PipelineConfig PipelineConfig::from_kv(const KeyValueConfig& kv) {
    PipelineConfig c;

    if (kv.has("schema.dims")) {
        const auto cards = kv.get_int_list("schema.dims", {});
        std::vector<ParamDescriptor> dims;
        for (std::size_t i = 0; i < cards.size(); ++i) {
            dims.push_back({"d" + std::to_string(i), cards[i]});
        }
        try {
            c.schema = ContentSchema(std::move(dims));
        } catch (const Error& e) {
            throw ConfigError(std::string("schema.dims: ") + e.what());
        }
    }

    c.seed = kv.get_u64("seed", c.seed);
    c.out_dir = kv.get_string("out", c.out_dir.string());

    c.world.seed = kv.get_u64("world.seed", c.world.seed);
    c.world.accept_offset = kv.get_double("world.accept_offset", c.world.accept_offset);
    c.world.playlog_dims = kv.get_int("world.playlog_dims", c.world.playlog_dims);
    c.world.playlog_sigma = kv.get_double("world.playlog_sigma", c.world.playlog_sigma);
    c.world.adjacent_enjoy_prob =
        kv.get_double("world.adjacent_enjoy_prob", c.world.adjacent_enjoy_prob);

    c.cluster_k = kv.get_int("clustering.K", c.cluster_k);
    c.sample_per_cluster = kv.get_int("clustering.sample_per_cluster", c.sample_per_cluster);
    c.cluster_subsample = kv.get_int("clustering.subsample", c.cluster_subsample);
    c.cluster_full_space = kv.get_bool("clustering.full_space", c.cluster_full_space);
    c.cluster_max_iters = kv.get_int("clustering.max_iters", c.cluster_max_iters);

    c.icq.stop_hter = kv.get_double("icq.stop_hter", c.icq.stop_hter);
    c.icq.balance_band = kv.get_double("icq.balance_band", c.icq.balance_band);
    c.icq.max_iters = kv.get_int("icq.max_iters", c.icq.max_iters);
    c.icq.forest.trees = kv.get_int("icq.forest.trees", c.icq.forest.trees);
    c.icq.forest.max_depth = kv.get_int("icq.forest.max_depth", c.icq.forest.max_depth);
    c.icq.forest.min_leaf = kv.get_int("icq.forest.min_leaf", c.icq.forest.min_leaf);
    const std::string policy = kv.get_string("icq.policy", "least_confidence");
    if (policy == "least_confidence") {
        c.icq.policy = QueryPolicy::LeastConfidence;
    } else if (policy == "random") {
        c.icq.policy = QueryPolicy::Random;
    } else {
        throw ConfigError("icq.policy: unknown policy " + policy);
    }

    c.cc.stop_window = kv.get_int("cc.stop_window", c.cc.stop_window);
    c.cc.max_iters = kv.get_int("cc.max_iters", c.cc.max_iters);
    c.cc.init_budget_per_category =
        kv.get_int("cc.init_budget_per_category", c.cc.init_budget_per_category);
    c.cc.forest.trees = kv.get_int("cc.forest.trees", c.cc.forest.trees);
    c.cc.forest.max_depth = kv.get_int("cc.forest.max_depth", c.cc.forest.max_depth);
    c.cc.forest.min_leaf = kv.get_int("cc.forest.min_leaf", c.cc.forest.min_leaf);
    c.cc_min_per_category = kv.get_int("cc.min_per_category", c.cc_min_per_category);
    c.cc_confidence_threshold =
        kv.get_double("cc.confidence_threshold", c.cc_confidence_threshold);
    c.cc.rejection_threshold = c.cc_confidence_threshold;

    c.beta_games = kv.get_int("beta.games", c.beta_games);
    c.beta_per_category = kv.get_int("beta.per_category", c.beta_per_category);
    c.beta.players = kv.get_int("beta.players", c.beta.players);
    c.beta.plays_min = kv.get_int("beta.plays_min", c.beta.plays_min);
    c.beta.plays_max = kv.get_int("beta.plays_max", c.beta.plays_max);
    c.beta.reliability_lo = kv.get_double("beta.reliability_lo", c.beta.reliability_lo);
    c.beta.reliability_hi = kv.get_double("beta.reliability_hi", c.beta.reliability_hi);
    const std::string mode = kv.get_string("beta.preference_mode", "skill");
    if (mode == "skill") {
        c.beta.preference_mode = PreferenceMode::SkillDerived;
    } else if (mode == "shared") {
        c.beta.preference_mode = PreferenceMode::Shared;
    } else {
        throw ConfigError("beta.preference_mode: expected skill or shared, got " + mode);
    }
    c.beta.shared_preferred =
        kv.get_int_list("beta.shared_preferred", c.beta.shared_preferred);

    c.gpe.max_epochs = kv.get_int("gpe.max_epochs", c.gpe.max_epochs);
    c.gpe.tol = kv.get_double("gpe.tol", c.gpe.tol);
    c.gpe.bandwidth = kv.get_double("gpe.bandwidth", c.gpe.bandwidth);
    c.gpe.ridge = kv.get_double("gpe.ridge", c.gpe.ridge);
    c.gpe.refit_regressor = kv.get_bool("gpe.refit_regressor", c.gpe.refit_regressor);

    c.pdc_alpha_thresholds =
        kv.get_double_list("pdc.alpha_thresholds", c.pdc_alpha_thresholds);
    c.pdc_beta_thresholds =
        kv.get_double_list("pdc.beta_thresholds", c.pdc_beta_thresholds);
    c.pdc.folds = kv.get_int("pdc.folds", c.pdc.folds);
    c.pdc.confidence_threshold =
        kv.get_double("pdc.confidence_threshold", c.pdc.confidence_threshold);
    c.pdc.rejection_threshold =
        kv.get_double("pdc.rejection_threshold", c.pdc.rejection_threshold);
    c.pdc.forest.trees = kv.get_int("pdc.forest.trees", c.pdc.forest.trees);
    c.pdc.forest.max_depth = kv.get_int("pdc.forest.max_depth", c.pdc.forest.max_depth);
    c.pdc.forest.min_leaf = kv.get_int("pdc.forest.min_leaf", c.pdc.forest.min_leaf);
    c.pdc_self_disagreement_bound =
        kv.get_double("pdc.self_disagreement_bound", c.pdc_self_disagreement_bound);

    c.ip.window = kv.get_int("ip.window", c.ip.window);
    c.ip.consistency = kv.get_int("ip.consistency", c.ip.consistency);
    c.ip.budget = kv.get_int("ip.budget", c.ip.budget);
    c.ip.drift_run = kv.get_int("ip.drift_run", c.ip.drift_run);
    c.ip.generalize_quantile =
        kv.get_double("ip.generalize_quantile", c.ip.generalize_quantile);

    c.eval_players = kv.get_int("evaluate.players", c.eval_players);
    c.eval_games_per_model =
        kv.get_int("evaluate.games_per_model", c.eval_games_per_model);

    c.validate();
    return c;
}

void PipelineConfig::validate() const {
    if (cluster_k < 1) throw ConfigError("clustering.K must be >= 1");
    if (sample_per_cluster < 1) throw ConfigError("clustering.sample_per_cluster must be >= 1");
    if (cluster_subsample < cluster_k) {
        throw ConfigError("clustering.subsample must be >= clustering.K");
    }
    if (cc_min_per_category < 1) throw ConfigError("cc.min_per_category must be >= 1");
    if (cc_confidence_threshold < 0.0 || cc_confidence_threshold > 1.0) {
        throw ConfigError("cc.confidence_threshold must lie in [0,1]");
    }
    if (beta_games < 1) throw ConfigError("beta.games must be >= 1");
    if (beta_per_category < 1) throw ConfigError("beta.per_category must be >= 1");
    if (beta.players < 2) throw ConfigError("beta.players must be >= 2");
    if (beta.plays_min < 1 || beta.plays_max < beta.plays_min) {
        throw ConfigError("beta.plays_min/plays_max must satisfy 1 <= min <= max");
    }
    if (pdc.folds < 2) throw ConfigError("pdc.folds must be >= 2");
    for (double t : pdc_alpha_thresholds) {
        if (t < 0.0 || t > 1.0) throw ConfigError("pdc.alpha_thresholds must lie in [0,1]");
    }
    for (double t : pdc_beta_thresholds) {
        if (t < 0.0 || t > 1.0) throw ConfigError("pdc.beta_thresholds must lie in [0,1]");
    }
    ip.validate();
    if (eval_players < 1) throw ConfigError("evaluate.players must be >= 1");
    if (eval_games_per_model < 1) throw ConfigError("evaluate.games_per_model must be >= 1");
}

// ---------------------------------------------------------------------------
// Metrics and baselines

EvaluationReport score_models(const std::vector<PlayerEvaluation>& evaluations,
                              int num_categories) {
    if (num_categories < 1) throw ConfigError("score_models: num_categories must be >= 1");
    EvaluationReport report;
    std::map<std::string, double> totals;
    for (const auto& eval : evaluations) {
        EvaluationReport::PlayerScore ps;
        ps.player = eval.player;
        std::vector<int> positives(num_categories, 0);
        std::vector<int> plays(num_categories, 0);
        for (const auto& [model, games] : eval.plays_by_model) {
            for (const auto& g : games) {
                if (g.category < 0 || g.category >= num_categories) {
                    throw ContractError("score_models: category out of range");
                }
                ++plays[g.category];
                positives[g.category] += g.feedback;
            }
        }
        ps.preference_rate.assign(num_categories, 0.0);
        ps.rate_defined.assign(num_categories, false);
        for (int cat = 0; cat < num_categories; ++cat) {
            if (plays[cat] > 0) {
                ps.preference_rate[cat] =
                    static_cast<double>(positives[cat]) / plays[cat];
                ps.rate_defined[cat] = true;
            }
        }
        for (const auto& [model, games] : eval.plays_by_model) {
            std::vector<int> served(num_categories, 0);
            for (const auto& g : games) ++served[g.category];
            double s = 0.0;
            for (int cat = 0; cat < num_categories; ++cat) {
                s += ps.preference_rate[cat] * served[cat];
            }
            ps.model_score[model] = s;
            totals[model] += s;
        }
        report.players.push_back(std::move(ps));
    }
    for (const auto& [model, total] : totals) {
        report.mean_score[model] =
            report.players.empty() ? 0.0 : total / report.players.size();
    }
    return report;
}

void EvaluationReport::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    std::vector<std::string> models;
    for (const auto& [model, score] : mean_score) models.push_back(model);
    out << "player";
    for (const auto& m : models) out << ",S_" << m;
    if (!players.empty()) {
        for (std::size_t c = 0; c < players.front().preference_rate.size(); ++c) {
            out << ",rho_" << c;
        }
    }
    out << '\n';
    for (const auto& ps : players) {
        out << ps.player;
        for (const auto& m : models) {
            const auto it = ps.model_score.find(m);
            out << ',' << (it == ps.model_score.end() ? 0.0 : it->second);
        }
        for (std::size_t c = 0; c < ps.preference_rate.size(); ++c) {
            if (ps.rate_defined[c]) {
                out << ',' << ps.preference_rate[c];
            } else {
                out << ",nan";
            }
        }
        out << '\n';
    }
}

std::vector<int> baseline_balanced(const std::vector<int>& beta_categories,
                                   int n, int num_categories,
                                   std::uint64_t seed) {
    if (n < 0) throw ConfigError("baseline_balanced: n must be >= 0");
    if (num_categories < 1) {
        throw ConfigError("baseline_balanced: num_categories must be >= 1");
    }
    std::vector<std::vector<int>> by_cat(num_categories);
    for (std::size_t i = 0; i < beta_categories.size(); ++i) {
        const int c = beta_categories[i];
        if (c < 0 || c >= num_categories) {
            throw ContractError("baseline_balanced: category out of range");
        }
        by_cat[c].push_back(static_cast<int>(i));
    }
    Rng rng(seed);
    for (auto& pool : by_cat) rng.shuffle(pool);

    std::vector<int> quota(num_categories, n / num_categories);
    for (int r = 0; r < n % num_categories; ++r) ++quota[r];

    std::vector<int> picked;
    std::vector<std::size_t> cursor(num_categories, 0);
    for (int c = 0; c < num_categories; ++c) {
        while (quota[c] > 0 && cursor[c] < by_cat[c].size()) {
            picked.push_back(by_cat[c][cursor[c]++]);
            --quota[c];
        }
    }
    // spill unmet quotas onto categories that still have games
    int remaining = 0;
    for (int c = 0; c < num_categories; ++c) remaining += quota[c];
    int cat = 0;
    while (remaining > 0) {
        bool progress = false;
        for (int step = 0; step < num_categories && remaining > 0; ++step) {
            const int c = (cat + step) % num_categories;
            if (cursor[c] < by_cat[c].size()) {
                picked.push_back(by_cat[c][cursor[c]++]);
                --remaining;
                progress = true;
            }
        }
        if (!progress) throw PoolExhaustedError("baseline_balanced: beta pool too small");
    }
    return picked;
}

std::vector<ContentVector> baseline_random(const ContentSchema& schema, int n,
                                           std::uint64_t seed) {
    if (n < 0) throw ConfigError("baseline_random: n must be >= 0");
    Rng rng(seed);
    std::vector<ContentVector> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        ContentVector g;
        g.values.resize(schema.dim_count());
        for (std::size_t d = 0; d < schema.dim_count(); ++d) {
            g.values[d] = static_cast<int>(
                rng.below(static_cast<std::uint64_t>(schema.cardinality(d))));
        }
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<bool> reliable_player_mask(const SurveyMatrix& surveys,
                                       double bound) {
    surveys.validate();
    // per player: fraction of repeat-played games whose labels disagree
    std::vector<int> repeated(surveys.player_count, 0);
    std::vector<int> inconsistent(surveys.player_count, 0);
    std::map<std::pair<int, int>, std::vector<int>> labels;
    for (const auto& e : surveys.entries) {
        labels[{e.player, e.game}].push_back(e.label);
    }
    for (const auto& [key, ys] : labels) {
        if (ys.size() < 2) continue;
        ++repeated[key.first];
        if (std::adjacent_find(ys.begin(), ys.end(), std::not_equal_to<>()) !=
            ys.end()) {
            ++inconsistent[key.first];
        }
    }
    std::vector<bool> mask(surveys.player_count, true);
    for (int p = 0; p < surveys.player_count; ++p) {
        if (repeated[p] > 0 &&
            static_cast<double>(inconsistent[p]) / repeated[p] > bound) {
            mask[p] = false;
        }
    }
    return mask;
}

// ---------------------------------------------------------------------------
// Stage orchestration

Stage stage_from_string(const std::string& name) {
    if (name == "cluster") return Stage::Cluster;
    if (name == "icq") return Stage::Icq;
    if (name == "cc") return Stage::Cc;
    if (name == "beta") return Stage::Beta;
    if (name == "gpe") return Stage::Gpe;
    if (name == "pdc") return Stage::Pdc;
    if (name == "ip") return Stage::Ip;
    if (name == "evaluate") return Stage::Evaluate;
    throw ConfigError("unknown stage: " + name);
}

const char* to_string(Stage stage) {
    switch (stage) {
        case Stage::Cluster: return "cluster";
        case Stage::Icq: return "icq";
        case Stage::Cc: return "cc";
        case Stage::Beta: return "beta";
        case Stage::Gpe: return "gpe";
        case Stage::Pdc: return "pdc";
        case Stage::Ip: return "ip";
        case Stage::Evaluate: return "evaluate";
    }
    return "unknown";
}

namespace {

namespace fs = std::filesystem;

void require_file(const fs::path& path, const char* stage, const char* producer) {
    if (!fs::exists(path)) {
        throw DependencyError(std::string(stage) + ": missing " + path.string() +
                              " (run the '" + producer + "' stage first)");
    }
}

json game_to_json(const ContentVector& g) { return json(g.values); }

ContentVector game_from_json(const json& j) {
    return ContentVector{j.get<std::vector<int>>()};
}

void write_json_file(const json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << j.dump(1) << '\n';
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw SerializationError(path.string() + ": " + e.what());
    }
}

// annotations made during acceptability labeling, with the feature labels the
// annotator assigned to the acceptable ones
void write_annotations(const std::vector<LabeledGame>& annotations,
                       const fs::path& path) {
    json arr = json::array();
    for (const auto& a : annotations) {
        json row = {{"game", game_to_json(a.game)},
                    {"acceptability", a.acceptability}};
        if (a.features) row["features"] = json(a.features->values);
        arr.push_back(std::move(row));
    }
    write_json_file({{"format_version", kFormatVersion},
                     {"artifact_kind", "annotations"},
                     {"payload", std::move(arr)}},
                    path);
}

std::vector<LabeledGame> read_annotations(const fs::path& path) {
    const json j = read_json_file(path);
    std::vector<LabeledGame> out;
    for (const auto& row : j.at("payload")) {
        LabeledGame a;
        a.game = game_from_json(row.at("game"));
        a.acceptability = row.at("acceptability").get<int>();
        if (row.contains("features")) {
            a.features = FeatureVector{row.at("features").get<std::vector<int>>()};
        }
        out.push_back(std::move(a));
    }
    return out;
}

void write_surveys(const SurveyMatrix& surveys, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << "game,player,label,rating\n";
    for (const auto& e : surveys.entries) {
        out << e.game << ',' << e.player << ',' << e.label << ',' << e.rating
            << '\n';
    }
}

SurveyMatrix read_surveys(const fs::path& path,
                          std::vector<ContentVector> games) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    SurveyMatrix m;
    m.games = std::move(games);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != 4) throw SerializationError(path.string() + ": bad row");
        SurveyMatrix::Entry e;
        e.game = std::stoi(cols[0]);
        e.player = std::stoi(cols[1]);
        e.label = std::stoi(cols[2]);
        e.rating = std::stoi(cols[3]);
        m.player_count = std::max(m.player_count, e.player + 1);
        m.entries.push_back(e);
    }
    m.validate();
    return m;
}

void write_examples(const std::vector<PdcExample>& examples,
                    const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.precision(17);
    out << "player,target,features,playlog\n";
    for (const auto& e : examples) {
        out << e.player << ',' << e.target << ',';
        for (std::size_t i = 0; i < e.features.values.size(); ++i) {
            out << (i ? ";" : "") << e.features.values[i];
        }
        out << ',';
        for (std::size_t i = 0; i < e.playlog.size(); ++i) {
            out << (i ? ";" : "") << e.playlog[i];
        }
        out << '\n';
    }
}

std::vector<PdcExample> read_examples(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    std::vector<PdcExample> out;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != 4) throw SerializationError(path.string() + ": bad row");
        PdcExample e;
        e.player = std::stoi(cols[0]);
        e.target = std::stoi(cols[1]);
        for (const auto& v : split(cols[2], ';')) {
            e.features.values.push_back(std::stoi(v));
        }
        for (const auto& v : split(cols[3], ';')) {
            e.playlog.push_back(std::stod(v));
        }
        out.push_back(std::move(e));
    }
    return out;
}

void write_reliability(const AnnotatorReliability& reliability,
                       const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.precision(17);
    out << "player,alpha,beta\n";
    for (std::size_t p = 0; p < reliability.alpha.size(); ++p) {
        out << p << ',' << reliability.alpha[p] << ',' << reliability.beta[p]
            << '\n';
    }
}

AnnotatorReliability read_reliability(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    AnnotatorReliability r;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != 3) throw SerializationError(path.string() + ": bad row");
        r.alpha.push_back(std::stod(cols[1]));
        r.beta.push_back(std::stod(cols[2]));
    }
    return r;
}

void write_gamma(const ConsensusEstimate& consensus, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.precision(17);
    out << "game,gamma,degenerate\n";
    for (std::size_t n = 0; n < consensus.gamma.size(); ++n) {
        out << n << ',' << consensus.gamma[n] << ','
            << (consensus.degenerate[n] ? 1 : 0) << '\n';
    }
}

std::vector<double> read_gamma(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    std::vector<double> out;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != 3) throw SerializationError(path.string() + ": bad row");
        out.push_back(std::stod(cols[1]));
    }
    return out;
}

void stage_cluster(const PipelineConfig& config) {
    const fs::path out = config.out_dir;
    std::vector<ContentVector> points;
    if (config.cluster_full_space) {
        SpaceEnumerator it(config.schema);
        while (auto g = it.next()) points.push_back(std::move(*g));
    } else {
        const std::uint64_t space = config.schema.space_size();
        const std::uint64_t want =
            std::min<std::uint64_t>(config.cluster_subsample, space);
        // distinct uniform draws; indices decoded lexicographically
        Rng rng(derive_seed(config.seed, 10));
        std::vector<std::uint64_t> chosen;
        std::set<std::uint64_t> seen;
        while (chosen.size() < want) {
            const std::uint64_t idx = rng.below(space);
            if (seen.insert(idx).second) chosen.push_back(idx);
        }
        std::sort(chosen.begin(), chosen.end());
        for (std::uint64_t idx : chosen) {
            ContentVector g;
            g.values.resize(config.schema.dim_count());
            std::uint64_t rest = idx;
            for (std::size_t d = config.schema.dim_count(); d-- > 0;) {
                const auto card =
                    static_cast<std::uint64_t>(config.schema.cardinality(d));
                g.values[d] = static_cast<int>(rest % card);
                rest /= card;
            }
            points.push_back(std::move(g));
        }
    }
    if (points.size() < static_cast<std::size_t>(config.cluster_k)) {
        throw DegenerateDataError("cluster: fewer points than clusters");
    }

    const ClusterPartition partition =
        k_medoids(points, config.cluster_k, config.schema,
                  derive_seed(config.seed, 11), config.cluster_max_iters);
    save_artifact(partition, out / "partition.json");

    const ContentSubspace reduced = sample_per_cluster(
        partition, config.sample_per_cluster, derive_seed(config.seed, 12));
    save_artifact(reduced, out / "reduced.json");
}

void stage_icq(const PipelineConfig& config) {
    const fs::path out = config.out_dir;
    require_file(out / "partition.json", "icq", "cluster");
    require_file(out / "reduced.json", "icq", "cluster");
    const auto partition = load_artifact<ClusterPartition>(out / "partition.json");
    const auto reduced = load_artifact<ContentSubspace>(out / "reduced.json");

    const WorldModel world(config.schema, config.features, config.world);

    // validation set: one annotated representative per cluster
    ValidationSet validation;
    validation.role = ValidationRole::T_ICQ;
    for (const auto& medoid : representative_per_cluster(partition)) {
        validation.entries.push_back(
            {medoid, world.oracle_acceptability(medoid), std::nullopt});
    }

    IcqResult result = active_learn_icq(
        reduced, [&world](const ContentVector& g) { return world.oracle_acceptability(g); },
        validation, config.icq, derive_seed(config.seed, 20));

    // the annotator labels features alongside acceptability, so downstream
    // category learning can reuse these games for free
    for (auto& a : result.annotations) {
        if (a.acceptability > 0) a.features = world.oracle_feature(a.game);
    }

    save_artifact(result.classifier, out / "icq_model.json");
    result.curve.write_csv(out / "icq_curve.csv");
    write_annotations(result.annotations, out / "icq_annotations.json");

    ContentSubspace working;
    working.schema = partition.schema;
    working.tag = SubspaceTag::Full;
    working.members = partition.points;
    save_artifact(filter_acceptable(working, result.classifier), out / "ga.json");
    save_artifact(filter_acceptable(reduced, result.classifier),
                  out / "ga_prime.json");
}

void stage_cc(const PipelineConfig& config) {
    const fs::path out = config.out_dir;
    require_file(out / "ga.json", "cc", "icq");
    require_file(out / "ga_prime.json", "cc", "icq");
    require_file(out / "icq_annotations.json", "cc", "icq");
    const auto ga = load_artifact<ContentSubspace>(out / "ga.json");
    const auto ga_prime = load_artifact<ContentSubspace>(out / "ga_prime.json");
    const auto icq_annotations = read_annotations(out / "icq_annotations.json");

    const WorldModel world(config.schema, config.features, config.world);

    // validation set: stratified draw from the acceptable pool, aiming for
    // min_per_category annotated games of every category value
    const int categories = config.features.domain_size(0);
    std::vector<int> have(categories, 0);
    std::vector<std::size_t> order(ga.members.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, 30));
    rng.shuffle(order);
    ValidationSet validation;
    validation.role = ValidationRole::T_CC;
    // a few labeled spares per category beyond the validation set, handed to
    // the active learner as starter annotations so rare categories are
    // represented even when the query pool lacks them
    std::vector<CcAnnotation> starters;
    const int spare_per_category = 3;
    std::vector<int> spares(categories, 0);
    for (std::size_t idx : order) {
        const ContentVector& g = ga.members[idx];
        const FeatureVector f = world.oracle_feature(g);
        const int cat = f.values[0];
        // each category's first game validates, its second becomes a starter,
        // then validation fills to the minimum before more spares accrue
        if (have[cat] == 0) {
            validation.entries.push_back({g, +1, f});
            ++have[cat];
        } else if (spares[cat] == 0) {
            starters.push_back({g, f});
            ++spares[cat];
        } else if (have[cat] < config.cc_min_per_category) {
            validation.entries.push_back({g, +1, f});
            ++have[cat];
        } else if (spares[cat] < spare_per_category) {
            starters.push_back({g, f});
            ++spares[cat];
        } else {
            continue;
        }
        if (std::all_of(have.begin(), have.end(),
                        [&](int n) { return n >= config.cc_min_per_category; }) &&
            std::all_of(spares.begin(), spares.end(), [&](int n) {
                return n >= spare_per_category;
            })) {
            break;
        }
    }
    for (int cat = 0; cat < categories; ++cat) {
        if (have[cat] == 0) {
            throw MissingCategoryError(
                "cc: no acceptable game of category " + std::to_string(cat) +
                " found for the validation set");
        }
    }

    std::vector<CcAnnotation> reused = std::move(starters);
    for (const auto& a : icq_annotations) {
        if (a.acceptability > 0 && a.features) reused.push_back({a.game, *a.features});
    }

    const CcResult result = active_learn_cc(
        ga_prime, [&world](const ContentVector& g) { return world.oracle_feature(g); },
        validation, reused, config.features, config.cc,
        derive_seed(config.seed, 31));

    save_artifact(result.models.at(0), out / "cc_model.json");
    result.curves.at(0).write_csv(out / "cc_curve.csv");
    {
        std::ofstream report(out / "cc_report.csv");
        if (!report) throw Error("cannot open cc_report.csv for writing");
        report << "feature,category,error\n";
        for (std::size_t f = 0; f < result.final_per_category_error.size(); ++f) {
            const auto& errors = result.final_per_category_error[f];
            for (std::size_t cat = 0; cat < errors.size(); ++cat) {
                report << f << ',' << cat << ',' << errors[cat] << '\n';
            }
        }
    }

    const ContentSubspace gac =
        filter_confident(ga, result.models.at(0), config.cc_confidence_threshold);
    save_artifact(gac, out / "gac.json");
    {
        std::ofstream dump(out / "gac_categories.csv");
        if (!dump) throw Error("cannot open gac_categories.csv for writing");
        dump << "game,category,confidence\n";
        for (std::size_t i = 0; i < gac.members.size(); ++i) {
            for (std::size_t d = 0; d < gac.members[i].values.size(); ++d) {
                dump << (d ? ";" : "") << gac.members[i].values[d];
            }
            dump << ',' << gac.categories[i] << ',' << gac.confidences[i] << '\n';
        }
    }
}

void stage_beta(const PipelineConfig& config) {
    const fs::path out = config.out_dir;
    require_file(out / "gac.json", "beta", "cc");
    const auto gac = load_artifact<ContentSubspace>(out / "gac.json");
    if (gac.members.empty()) throw DegenerateDataError("beta: G_ac is empty");

    const WorldModel world(config.schema, config.features, config.world);
    const int categories = config.features.domain_size(0);

    // per category, the highest-confidence classifier picks; lexicographic
    // game order breaks confidence ties deterministically
    std::vector<std::size_t> order(gac.members.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (gac.confidences[a] != gac.confidences[b]) {
            return gac.confidences[a] > gac.confidences[b];
        }
        return gac.members[a] < gac.members[b];
    });
    std::vector<int> taken(categories, 0);
    ContentSubspace beta_set;
    beta_set.schema = gac.schema;
    beta_set.tag = SubspaceTag::ConfidentAcceptable;
    for (std::size_t idx : order) {
        const int cat = gac.categories[idx];
        if (taken[cat] >= config.beta_per_category) continue;
        ++taken[cat];
        beta_set.members.push_back(gac.members[idx]);
        beta_set.categories.push_back(cat);
        beta_set.confidences.push_back(gac.confidences[idx]);
        if (static_cast<int>(beta_set.members.size()) >= config.beta_games) break;
    }
    for (int cat = 0; cat < categories; ++cat) {
        if (taken[cat] < config.beta_per_category) {
            std::cerr << "beta: only " << taken[cat] << " of "
                      << config.beta_per_category << " games for category "
                      << cat << "\n";
        }
    }
    if (beta_set.members.empty()) throw DegenerateDataError("beta: no games selected");
    save_artifact(beta_set, out / "beta_games.json");

    const BetaCohort cohort = generate_beta_cohort(
        world, beta_set.members, config.beta, derive_seed(config.seed, 40));
    write_surveys(cohort.surveys, out / "surveys.csv");
    write_examples(cohort.examples, out / "playlogs.csv");
    {
        std::ofstream plants(out / "plants.csv");
        if (!plants) throw Error("cannot open plants.csv for writing");
        plants.precision(17);
        plants << "player,skill,preferred,alpha_star,beta_star\n";
        for (const auto& p : cohort.plants) {
            plants << p.id << ',' << p.skill << ',';
            for (std::size_t i = 0; i < p.preferred.size(); ++i) {
                plants << (i ? ";" : "") << p.preferred[i];
            }
            plants << ',' << p.alpha_star << ',' << p.beta_star << '\n';
        }
    }
}

void stage_gpe(const PipelineConfig& config) {
    const fs::path out = config.out_dir;
    require_file(out / "beta_games.json", "gpe", "beta");
    require_file(out / "surveys.csv", "gpe", "beta");
    const auto beta_set = load_artifact<ContentSubspace>(out / "beta_games.json");
    const SurveyMatrix surveys =
        read_surveys(out / "surveys.csv", beta_set.members);

    const CrowdEmResult result =
        crowd_em(surveys, config.schema, config.gpe, derive_seed(config.seed, 50));

    write_reliability(result.reliability, out / "gpe_reliability.csv");
    write_gamma(result.consensus, out / "gpe_gamma.csv");
    {
        std::ofstream epochs(out / "gpe_epochs.csv");
        if (!epochs) throw Error("cannot open gpe_epochs.csv for writing");
        epochs.precision(17);
        epochs << "epoch,log_likelihood\n";
        for (std::size_t e = 0; e < result.epoch_log_likelihood.size(); ++e) {
            epochs << e << ',' << result.epoch_log_likelihood[e] << '\n';
        }
    }
    save_artifact(result.regressor, out / "gpe_regressor.json");
}

void stage_pdc(const PipelineConfig& config) {
    const fs::path out = config.out_dir;
    require_file(out / "playlogs.csv", "pdc", "beta");
    require_file(out / "beta_games.json", "pdc", "beta");
    require_file(out / "surveys.csv", "pdc", "beta");
    require_file(out / "gpe_reliability.csv", "pdc", "gpe");
    const auto beta_set = load_artifact<ContentSubspace>(out / "beta_games.json");
    const SurveyMatrix surveys =
        read_surveys(out / "surveys.csv", beta_set.members);
    std::vector<PdcExample> examples = read_examples(out / "playlogs.csv");
    const AnnotatorReliability reliability =
        read_reliability(out / "gpe_reliability.csv");

    const std::vector<bool> keep =
        reliable_player_mask(surveys, config.pdc_self_disagreement_bound);
    std::erase_if(examples, [&](const PdcExample& e) { return !keep[e.player]; });
    if (examples.empty()) {
        throw DegenerateDataError("pdc: all players excluded as inconsistent");
    }

    const auto subsets =
        build_threshold_subsets(examples, reliability, config.pdc_alpha_thresholds,
                                config.pdc_beta_thresholds);
    const PreferenceEnsemble ensemble =
        train_ensemble(examples, subsets, config.features, config.pdc,
                       derive_seed(config.seed, 60));
    save_artifact(ensemble, out / "pdc_model.json");

    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(i * 0.05);
    const auto write_sweep = [&](const std::vector<SweepRow>& rows,
                                 const fs::path& path) {
        std::ofstream sweep(path);
        if (!sweep) throw Error("cannot open " + path.string() + " for writing");
        sweep.precision(17);
        sweep << "threshold,pos_error,neg_error,hter,reject_rate\n";
        for (const auto& r : rows) {
            sweep << r.threshold << ',' << r.pos_error << ',' << r.neg_error
                  << ',' << r.hter << ',' << r.reject_rate << '\n';
        }
    };
    write_sweep(rejection_sweep(ensemble, examples, grid),
                out / "pdc_rejection_sweep.csv");
    write_sweep(confidence_sweep(ensemble, examples, grid),
                out / "pdc_confidence_sweep.csv");
}

IpAssets load_ip_assets(const PipelineConfig& config, const char* stage) {
    const fs::path out = config.out_dir;
    require_file(out / "beta_games.json", stage, "beta");
    require_file(out / "gpe_gamma.csv", stage, "gpe");
    require_file(out / "gpe_regressor.json", stage, "gpe");
    require_file(out / "gac.json", stage, "cc");

    IpAssets assets;
    const auto beta_set = load_artifact<ContentSubspace>(out / "beta_games.json");
    assets.beta_games = beta_set.members;
    assets.beta_category = beta_set.categories;
    assets.beta_gamma = read_gamma(out / "gpe_gamma.csv");
    assets.gac = load_artifact<ContentSubspace>(out / "gac.json");
    assets.num_categories = config.features.domain_size(0);

    const auto regressor = load_artifact<KernelRidge>(out / "gpe_regressor.json");
    assets.gac_gamma.reserve(assets.gac.members.size());
    for (const auto& g : assets.gac.members) {
        assets.gac_gamma.push_back(predict_popularity(regressor, g, config.schema));
    }
    assets.validate();
    return assets;
}

void stage_ip(const PipelineConfig& config) {
    const fs::path out = config.out_dir;
    const IpAssets assets = load_ip_assets(config, "ip");
    require_file(out / "pdc_model.json", "ip", "pdc");
    const auto pdc = load_artifact<PreferenceEnsemble>(out / "pdc_model.json");

    const WorldModel world(config.schema, config.features, config.world);
    SimulatedPlayer demo;
    demo.id = 0;
    demo.skill = 0.35;
    demo.preferred = {world.band_from_skill(demo.skill)};
    demo.alpha_star = 0.95;
    demo.beta_star = 0.95;

    const SessionTranscript transcript =
        run_session(world, demo, assets, pdc, config.ip, 30,
                    derive_seed(config.seed, 70));
    transcript.write_csv(out / "ip_transcript_demo.csv");

    // a resumable session artifact, replayed to the same point
    PlayerSession session = make_session(assets, derive_seed(config.seed, 71));
    for (int i = 0; i < 10; ++i) {
        const ContentVector g = next_game(session, assets, config.ip);
        const PlayOutcome outcome =
            world.play(demo, g, derive_seed(config.seed, 7100 + i), i);
        observe(session, outcome.playlog, pdc, config.ip);
    }
    save_artifact(session, out / "ip_session_demo.json");
}

void stage_evaluate(const PipelineConfig& config) {
    const fs::path out = config.out_dir;
    const IpAssets assets = load_ip_assets(config, "evaluate");
    require_file(out / "pdc_model.json", "evaluate", "pdc");
    const auto pdc = load_artifact<PreferenceEnsemble>(out / "pdc_model.json");

    const WorldModel world(config.schema, config.features, config.world);
    const int n = config.eval_games_per_model;
    const int categories = config.features.domain_size(0);

    std::vector<PlayerEvaluation> evaluations;
    for (int p = 0; p < config.eval_players; ++p) {
        SimulatedPlayer player;
        player.id = p;
        player.skill = (p + 0.5) / config.eval_players;
        player.preferred = {world.band_from_skill(player.skill)};
        player.alpha_star = 0.95;
        player.beta_star = 0.95;

        PlayerEvaluation eval;
        eval.player = p;

        const SessionTranscript transcript =
            run_session(world, player, assets, pdc, config.ip, n,
                        derive_seed(config.seed, 7000 + p));
        for (const auto& r : transcript.records) {
            eval.plays_by_model["adaptive"].push_back(
                {world.difficulty_band(r.game), r.reported_feedback});
        }

        const auto balanced_idx =
            baseline_balanced(assets.beta_category, n, categories,
                              derive_seed(config.seed, 8000 + p));
        for (std::size_t j = 0; j < balanced_idx.size(); ++j) {
            const ContentVector& g = assets.beta_games[balanced_idx[j]];
            const PlayOutcome o = world.play(
                player, g, derive_seed(config.seed, 810000 + p * 1000 + j));
            eval.plays_by_model["balanced"].push_back(
                {world.difficulty_band(g), o.reported_feedback});
        }

        for (std::size_t j = 0;
             const ContentVector& g :
             baseline_random(config.schema, n, derive_seed(config.seed, 9000 + p))) {
            const PlayOutcome o = world.play(
                player, g, derive_seed(config.seed, 910000 + p * 1000 + j));
            eval.plays_by_model["random"].push_back(
                {world.difficulty_band(g), o.reported_feedback});
            ++j;
        }

        evaluations.push_back(std::move(eval));
    }

    const EvaluationReport report = score_models(evaluations, categories);
    report.write_csv(out / "evaluate_report.csv");
    {
        std::ofstream summary(out / "evaluate_summary.txt");
        if (!summary) throw Error("cannot open evaluate_summary.txt for writing");
        summary.precision(17);
        summary << "players " << config.eval_players << "\n"
                << "games_per_model " << n << "\n";
        for (const auto& [model, score] : report.mean_score) {
            summary << "mean_S " << model << " " << score << "\n";
        }
    }
}

}  // namespace

void run_stage(Stage stage, const PipelineConfig& config) {
    config.validate();
    std::filesystem::create_directories(config.out_dir);
    switch (stage) {
        case Stage::Cluster: stage_cluster(config); return;
        case Stage::Icq: stage_icq(config); return;
        case Stage::Cc: stage_cc(config); return;
        case Stage::Beta: stage_beta(config); return;
        case Stage::Gpe: stage_gpe(config); return;
        case Stage::Pdc: stage_pdc(config); return;
        case Stage::Ip: stage_ip(config); return;
        case Stage::Evaluate: stage_evaluate(config); return;
    }
    throw ContractError("run_stage: unknown stage");
}

void run_pipeline(const PipelineConfig& config) {
    for (Stage stage : {Stage::Cluster, Stage::Icq, Stage::Cc, Stage::Beta,
                        Stage::Gpe, Stage::Pdc, Stage::Ip, Stage::Evaluate}) {
        std::cerr << "[stage] " << to_string(stage) << "\n";
        run_stage(stage, config);
    }
}

}  // namespace lbpcg
