#include "lbpcg/content.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lbpcg {

ContentSchema::ContentSchema(std::vector<ParamDescriptor> dims)
    : dims_(std::move(dims)) {
    std::set<std::string> names;
    for (const auto& d : dims_) {
        if (d.cardinality < 2) {
            throw ConfigError("schema dimension '" + d.name +
                              "' has cardinality < 2");
        }
        if (!names.insert(d.name).second) {
            throw ConfigError("duplicate schema dimension name '" + d.name + "'");
        }
    }
}

std::uint64_t ContentSchema::space_size() const {
    std::uint64_t total = 1;
    for (const auto& d : dims_) {
        const auto c = static_cast<std::uint64_t>(d.cardinality);
        if (total > UINT64_MAX / c) {
            throw SizeOverflowError("content space size overflows 64 bits");
        }
        total *= c;
    }
    return total;
}

ContentSchema ContentSchema::default_schema() {
    // 3*6*3*3*5*4*3*3*4 = 116,640
    return ContentSchema({
        {"skill", 3},
        {"monster_count", 6},
        {"health_packs", 3},
        {"ammo", 3},
        {"weapon_choice", 5},
        {"monster_mix_a", 4},
        {"monster_mix_b", 3},
        {"monster_mix_c", 3},
        {"monster_mix_d", 4},
    });
}

bool valid_under(const ContentVector& g, const ContentSchema& schema) {
    if (g.values.size() != schema.dim_count()) return false;
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        if (g.values[i] < 0 || g.values[i] >= schema.cardinality(i)) return false;
    }
    return true;
}

void require_valid(const ContentVector& g, const ContentSchema& schema) {
    if (g.values.size() != schema.dim_count()) {
        throw DimensionMismatchError("content vector has " +
                                     std::to_string(g.values.size()) +
                                     " dims, schema has " +
                                     std::to_string(schema.dim_count()));
    }
    if (!valid_under(g, schema)) {
        throw ContractError("content vector value out of cardinality range");
    }
}

std::vector<double> normalize(const ContentVector& g, const ContentSchema& schema) {
    require_valid(g, schema);
    std::vector<double> out(g.values.size());
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        out[i] = static_cast<double>(g.values[i]) /
                 static_cast<double>(schema.cardinality(i) - 1);
    }
    return out;
}

double distance(const ContentVector& a, const ContentVector& b,
                const ContentSchema& schema) {
    require_valid(a, schema);
    require_valid(b, schema);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        sum += std::abs(a.values[i] - b.values[i]) /
               static_cast<double>(schema.cardinality(i) - 1);
    }
    return sum / static_cast<double>(schema.dim_count());
}

SpaceEnumerator::SpaceEnumerator(ContentSchema schema)
    : schema_(std::move(schema)), current_(schema_.dim_count(), 0) {
    schema_.space_size();  // surface overflow eagerly
    if (schema_.dim_count() == 0) done_ = true;
}

std::optional<ContentVector> SpaceEnumerator::next() {
    if (done_) return std::nullopt;
    if (fresh_) {
        fresh_ = false;
        return ContentVector{current_};
    }
    // odometer increment, last dimension fastest
    for (std::size_t i = schema_.dim_count(); i-- > 0;) {
        if (++current_[i] < schema_.cardinality(i)) {
            return ContentVector{current_};
        }
        current_[i] = 0;
    }
    done_ = true;
    return std::nullopt;
}

void SpaceEnumerator::seek(const ContentVector& cursor) {
    require_valid(cursor, schema_);
    current_ = cursor.values;
    done_ = false;
    fresh_ = true;
}

FeatureSchema FeatureSchema::default_difficulty() {
    return FeatureSchema{
        {{"difficulty", {"VeryEasy", "Easy", "Moderate", "Hard", "VeryHard"}}}};
}

bool valid_under(const FeatureVector& c, const FeatureSchema& schema) {
    if (c.values.size() != schema.feature_count()) return false;
    for (std::size_t f = 0; f < c.values.size(); ++f) {
        if (c.values[f] < 0 || c.values[f] >= schema.domain_size(f)) return false;
    }
    return true;
}

void LabeledGame::validate() const {
    if (acceptability != 1 && acceptability != -1) {
        throw ContractError("acceptability label must be +1 or -1");
    }
    if (features.has_value() && acceptability != 1) {
        throw ContractError("unacceptable games carry no feature annotation");
    }
}

const char* to_string(SubspaceTag tag) {
    switch (tag) {
        case SubspaceTag::Full: return "full";
        case SubspaceTag::Reduced: return "reduced";
        case SubspaceTag::Acceptable: return "acceptable";
        case SubspaceTag::ReducedAcceptable: return "reduced-acceptable";
        case SubspaceTag::ConfidentAcceptable: return "confident-acceptable";
    }
    return "unknown";
}

SubspaceTag subspace_tag_from_string(const std::string& s) {
    if (s == "full") return SubspaceTag::Full;
    if (s == "reduced") return SubspaceTag::Reduced;
    if (s == "acceptable") return SubspaceTag::Acceptable;
    if (s == "reduced-acceptable") return SubspaceTag::ReducedAcceptable;
    if (s == "confident-acceptable") return SubspaceTag::ConfidentAcceptable;
    throw SerializationError("unknown subspace tag '" + s + "'");
}

void ContentSubspace::validate() const {
    for (const auto& g : members) require_valid(g, schema);
    if (!categories.empty() && categories.size() != members.size()) {
        throw ContractError("category annotations do not match member count");
    }
    if (!confidences.empty() && confidences.size() != members.size()) {
        throw ContractError("confidence annotations do not match member count");
    }
}

}  // namespace lbpcg
