#include "lbpcg/serialize.hpp"

#include <fstream>

#include <json.hpp>

namespace lbpcg {

using nlohmann::json;

namespace {

json schema_to_json(const ContentSchema& schema) {
    json dims = json::array();
    for (const auto& d : schema.dims()) {
        dims.push_back({{"name", d.name}, {"cardinality", d.cardinality}});
    }
    return dims;
}

ContentSchema schema_from_json(const json& j) {
    std::vector<ParamDescriptor> dims;
    for (const auto& d : j) {
        dims.push_back({d.at("name").get<std::string>(),
                        d.at("cardinality").get<int>()});
    }
    return ContentSchema(std::move(dims));
}

json feature_schema_to_json(const FeatureSchema& schema) {
    json features = json::array();
    for (const auto& f : schema.features) {
        features.push_back({{"name", f.name}, {"values", f.values}});
    }
    return features;
}

FeatureSchema feature_schema_from_json(const json& j) {
    FeatureSchema out;
    for (const auto& f : j) {
        out.features.push_back({f.at("name").get<std::string>(),
                                f.at("values").get<std::vector<std::string>>()});
    }
    return out;
}

json forest_to_json(const RandomForest& model) {
    json trees = json::array();
    for (const auto& tree : model.trees()) {
        json nodes = json::array();
        for (const auto& n : tree) {
            nodes.push_back({{"f", n.feature},
                             {"t", n.threshold},
                             {"l", n.left},
                             {"r", n.right},
                             {"y", n.label},
                             {"p", n.prob_positive}});
        }
        trees.push_back(std::move(nodes));
    }
    const auto& cfg = model.config();
    return {{"trees", std::move(trees)},
            {"dims", model.dims()},
            {"config",
             {{"trees", cfg.trees},
              {"max_depth", cfg.max_depth},
              {"min_leaf", cfg.min_leaf},
              {"features_per_split", cfg.features_per_split},
              {"bootstrap", cfg.bootstrap}}},
            {"seed", model.seed()},
            {"fingerprint", model.data_fingerprint()}};
}

RandomForest forest_from_json(const json& j) {
    std::vector<std::vector<TreeNode>> trees;
    for (const auto& tj : j.at("trees")) {
        std::vector<TreeNode> nodes;
        for (const auto& nj : tj) {
            TreeNode n;
            n.feature = nj.at("f").get<int>();
            n.threshold = nj.at("t").get<double>();
            n.left = nj.at("l").get<int>();
            n.right = nj.at("r").get<int>();
            n.label = nj.at("y").get<int>();
            n.prob_positive = nj.at("p").get<double>();
            nodes.push_back(n);
        }
        trees.push_back(std::move(nodes));
    }
    const auto& cj = j.at("config");
    ForestConfig cfg;
    cfg.trees = cj.at("trees").get<int>();
    cfg.max_depth = cj.at("max_depth").get<int>();
    cfg.min_leaf = cj.at("min_leaf").get<int>();
    cfg.features_per_split = cj.at("features_per_split").get<int>();
    cfg.bootstrap = cj.at("bootstrap").get<bool>();
    return RandomForest::from_parts(std::move(trees), j.at("dims").get<std::size_t>(),
                                    cfg, j.at("seed").get<std::uint64_t>(),
                                    j.at("fingerprint").get<std::uint64_t>());
}

json krr_to_json(const KernelRidge& model) {
    return {{"support", model.support()},
            {"alpha", model.coefficients()},
            {"bandwidth", model.bandwidth()},
            {"ridge", model.ridge()}};
}

KernelRidge krr_from_json(const json& j) {
    return KernelRidge::from_parts(
        j.at("support").get<std::vector<std::vector<double>>>(),
        j.at("alpha").get<std::vector<double>>(),
        j.at("bandwidth").get<double>(), j.at("ridge").get<double>());
}

json subspace_to_json(const ContentSubspace& subspace) {
    json members = json::array();
    for (const auto& g : subspace.members) members.push_back(g.values);
    return {{"schema", schema_to_json(subspace.schema)},
            {"tag", to_string(subspace.tag)},
            {"members", std::move(members)},
            {"categories", subspace.categories},
            {"confidences", subspace.confidences}};
}

ContentSubspace subspace_from_json(const json& j) {
    ContentSubspace out;
    out.schema = schema_from_json(j.at("schema"));
    out.tag = subspace_tag_from_string(j.at("tag").get<std::string>());
    for (const auto& m : j.at("members")) {
        out.members.push_back(ContentVector{m.get<std::vector<int>>()});
    }
    out.categories = j.at("categories").get<std::vector<int>>();
    out.confidences = j.at("confidences").get<std::vector<double>>();
    out.validate();
    return out;
}

void write_wrapped(const json& payload, const std::string& kind,
                   const std::filesystem::path& path) {
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["artifact_kind"] = kind;
    doc["payload"] = payload;
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << doc.dump(1) << '\n';
}

json read_wrapped(const std::string& kind, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw SerializationError("corrupt artifact file " + path.string() + ": " +
                                 e.what());
    }
    if (!doc.contains("format_version") ||
        doc.at("format_version").get<int>() != kFormatVersion) {
        throw VersionMismatchError("unsupported format version in " +
                                   path.string());
    }
    if (doc.at("artifact_kind").get<std::string>() != kind) {
        throw SerializationError("expected artifact kind '" + kind + "' in " +
                                 path.string() + ", found '" +
                                 doc.at("artifact_kind").get<std::string>() + "'");
    }
    return doc.at("payload");
}

}  // namespace

void save_artifact(const RandomForest& model, const std::filesystem::path& path) {
    write_wrapped(forest_to_json(model), "classifier", path);
}

template <>
RandomForest load_artifact<RandomForest>(const std::filesystem::path& path) {
    return forest_from_json(read_wrapped("classifier", path));
}

void save_artifact(const KernelRidge& model, const std::filesystem::path& path) {
    write_wrapped(krr_to_json(model), "regressor", path);
}

template <>
KernelRidge load_artifact<KernelRidge>(const std::filesystem::path& path) {
    return krr_from_json(read_wrapped("regressor", path));
}

void save_artifact(const PreferenceEnsemble& model,
                   const std::filesystem::path& path) {
    json members = json::array();
    for (const auto& m : model.members) {
        json mj = {{"cv_accuracy", m.cv_accuracy},
                   {"weight", m.weight},
                   {"alpha_threshold", m.alpha_threshold},
                   {"beta_threshold", m.beta_threshold}};
        if (m.model) mj["model"] = forest_to_json(*m.model);
        members.push_back(std::move(mj));
    }
    write_wrapped({{"members", std::move(members)},
                   {"confidence_threshold", model.confidence_threshold},
                   {"rejection_threshold", model.rejection_threshold},
                   {"playlog_dims", model.playlog_dims},
                   {"feature_schema", feature_schema_to_json(model.feature_schema)}},
                  "ensemble", path);
}

template <>
PreferenceEnsemble load_artifact<PreferenceEnsemble>(
    const std::filesystem::path& path) {
    const json j = read_wrapped("ensemble", path);
    PreferenceEnsemble out;
    for (const auto& mj : j.at("members")) {
        EnsembleMember m;
        m.cv_accuracy = mj.at("cv_accuracy").get<double>();
        m.weight = mj.at("weight").get<double>();
        m.alpha_threshold = mj.at("alpha_threshold").get<double>();
        m.beta_threshold = mj.at("beta_threshold").get<double>();
        if (mj.contains("model")) m.model = forest_from_json(mj.at("model"));
        out.members.push_back(std::move(m));
    }
    out.confidence_threshold = j.at("confidence_threshold").get<double>();
    out.rejection_threshold = j.at("rejection_threshold").get<double>();
    out.playlog_dims = j.at("playlog_dims").get<std::size_t>();
    out.feature_schema = feature_schema_from_json(j.at("feature_schema"));
    return out;
}

void save_artifact(const ClusterPartition& partition,
                   const std::filesystem::path& path) {
    json points = json::array();
    for (const auto& p : partition.points) points.push_back(p.values);
    json medoids = json::array();
    for (const auto& m : partition.medoids) medoids.push_back(m.values);
    write_wrapped({{"schema", schema_to_json(partition.schema)},
                   {"points", std::move(points)},
                   {"medoids", std::move(medoids)},
                   {"assignment", partition.assignment},
                   {"total_cost", partition.total_cost}},
                  "partition", path);
}

template <>
ClusterPartition load_artifact<ClusterPartition>(
    const std::filesystem::path& path) {
    const json j = read_wrapped("partition", path);
    ClusterPartition out;
    out.schema = schema_from_json(j.at("schema"));
    for (const auto& p : j.at("points")) {
        out.points.push_back(ContentVector{p.get<std::vector<int>>()});
    }
    for (const auto& m : j.at("medoids")) {
        out.medoids.push_back(ContentVector{m.get<std::vector<int>>()});
    }
    out.assignment = j.at("assignment").get<std::vector<int>>();
    out.total_cost = j.at("total_cost").get<double>();
    out.validate();
    return out;
}

void save_artifact(const ContentSubspace& subspace,
                   const std::filesystem::path& path) {
    write_wrapped(subspace_to_json(subspace), "subspace", path);
}

template <>
ContentSubspace load_artifact<ContentSubspace>(const std::filesystem::path& path) {
    return subspace_from_json(read_wrapped("subspace", path));
}

void save_artifact(const PlayerSession& session,
                   const std::filesystem::path& path) {
    json history = json::array();
    for (const auto& e : session.history) {
        history.push_back({{"game_index", e.game_index},
                           {"from_beta", e.from_beta},
                           {"category", e.category},
                           {"state_before", to_string(e.state_before)},
                           {"state_after", to_string(e.state_after)},
                           {"decision", static_cast<int>(e.decision)},
                           {"score", e.score}});
    }
    write_wrapped(
        {{"state_kind", static_cast<int>(session.state.kind)},
         {"state_category", session.state.category},
         {"history", std::move(history)},
         {"categorize_attempts", session.categorize_attempts},
         {"beta_served", std::vector<int>(session.beta_served.begin(),
                                          session.beta_served.end())},
         {"gac_served_phase", std::vector<int>(session.gac_served_phase.begin(),
                                               session.gac_served_phase.end())},
         {"round_robin_cursor", session.round_robin_cursor},
         {"rng_state", session.rng_state}},
        "session", path);
}

namespace {

IpStateKind state_kind_from_string(const std::string& s) {
    if (s == "categorize") return IpStateKind::Categorize;
    if (s == "produce") return IpStateKind::Produce;
    if (s == "generalize") return IpStateKind::Generalize;
    throw SerializationError("unknown state '" + s + "'");
}

}  // namespace

template <>
PlayerSession load_artifact<PlayerSession>(const std::filesystem::path& path) {
    const json j = read_wrapped("session", path);
    PlayerSession out;
    out.state.kind = static_cast<IpStateKind>(j.at("state_kind").get<int>());
    out.state.category = j.at("state_category").get<int>();
    for (const auto& ej : j.at("history")) {
        SessionEvent e;
        e.game_index = ej.at("game_index").get<int>();
        e.from_beta = ej.at("from_beta").get<bool>();
        e.category = ej.at("category").get<int>();
        e.state_before =
            state_kind_from_string(ej.at("state_before").get<std::string>());
        e.state_after =
            state_kind_from_string(ej.at("state_after").get<std::string>());
        e.decision = static_cast<Decision>(ej.at("decision").get<int>());
        e.score = ej.at("score").get<double>();
        out.history.push_back(e);
    }
    out.categorize_attempts = j.at("categorize_attempts").get<int>();
    const auto beta = j.at("beta_served").get<std::vector<int>>();
    out.beta_served.assign(beta.begin(), beta.end());
    const auto gac = j.at("gac_served_phase").get<std::vector<int>>();
    out.gac_served_phase.assign(gac.begin(), gac.end());
    out.round_robin_cursor = j.at("round_robin_cursor").get<int>();
    out.rng_state = j.at("rng_state").get<std::uint64_t>();
    return out;
}

void save_artifact(const CategoryModel& model,
                   const std::filesystem::path& path) {
    json forests = json::array();
    for (const auto& f : model.one_vs_rest) forests.push_back(forest_to_json(f));
    write_wrapped({{"feature_id", model.feature_id},
                   {"rejection_threshold", model.rejection_threshold},
                   {"one_vs_rest", std::move(forests)}},
                  "classifier-set", path);
}

template <>
CategoryModel load_artifact<CategoryModel>(const std::filesystem::path& path) {
    const json j = read_wrapped("classifier-set", path);
    CategoryModel out;
    out.feature_id = j.at("feature_id").get<int>();
    out.rejection_threshold = j.at("rejection_threshold").get<double>();
    for (const auto& fj : j.at("one_vs_rest")) {
        out.one_vs_rest.push_back(forest_from_json(fj));
    }
    return out;
}

}  // namespace lbpcg
