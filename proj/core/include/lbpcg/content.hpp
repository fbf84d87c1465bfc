#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lbpcg/errors.hpp"

namespace lbpcg {

struct ParamDescriptor {
    std::string name;
    int cardinality = 2;  // ordinal levels are {0, ..., cardinality-1}

    friend bool operator==(const ParamDescriptor&,
                           const ParamDescriptor&) = default;
};

// Ordered list of ordinal game-parameter descriptors. Immutable after
// construction; defines the content space all other modules work in.
class ContentSchema {
public:
    ContentSchema() = default;
    explicit ContentSchema(std::vector<ParamDescriptor> dims);

    std::size_t dim_count() const { return dims_.size(); }
    int cardinality(std::size_t i) const { return dims_[i].cardinality; }
    const std::string& name(std::size_t i) const { return dims_[i].name; }
    const std::vector<ParamDescriptor>& dims() const { return dims_; }

    // Product of cardinalities; throws SizeOverflowError on 64-bit overflow.
    std::uint64_t space_size() const;

    // Nine ordinal parameters whose cardinalities multiply to 116,640.
    static ContentSchema default_schema();

    friend bool operator==(const ContentSchema&, const ContentSchema&) = default;

private:
    std::vector<ParamDescriptor> dims_;
};

struct ContentVector {
    std::vector<int> values;

    friend auto operator<=>(const ContentVector&, const ContentVector&) = default;
};

bool valid_under(const ContentVector& g, const ContentSchema& schema);
void require_valid(const ContentVector& g, const ContentSchema& schema);

// Per-dimension range normalization: value / (cardinality - 1), each in [0,1].
std::vector<double> normalize(const ContentVector& g, const ContentSchema& schema);

// Mean over dimensions of |a_i - b_i| / (cardinality_i - 1). Range [0,1].
double distance(const ContentVector& a, const ContentVector& b,
                const ContentSchema& schema);

// Lexicographic streaming enumeration of the full space; constant memory.
// Restartable from any cursor vector.
class SpaceEnumerator {
public:
    explicit SpaceEnumerator(ContentSchema schema);

    std::optional<ContentVector> next();
    void seek(const ContentVector& cursor);  // next() yields cursor first
    const ContentSchema& schema() const { return schema_; }

private:
    ContentSchema schema_;
    std::vector<int> current_;
    bool done_ = false;
    bool fresh_ = true;
};

// Categorical feature descriptors (CC's target domains).
struct FeatureDomain {
    std::string name;
    std::vector<std::string> values;

    friend bool operator==(const FeatureDomain&, const FeatureDomain&) = default;
};

struct FeatureSchema {
    std::vector<FeatureDomain> features;

    std::size_t feature_count() const { return features.size(); }
    int domain_size(std::size_t f) const {
        return static_cast<int>(features[f].values.size());
    }

    // Single "difficulty" feature with five bands.
    static FeatureSchema default_difficulty();

    friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

struct FeatureVector {
    std::vector<int> values;  // one categorical label index per feature

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

bool valid_under(const FeatureVector& c, const FeatureSchema& schema);

// One annotated game. Features may be present only for acceptable games.
struct LabeledGame {
    ContentVector game;
    int acceptability = 0;  // +1 or -1
    std::optional<FeatureVector> features;

    void validate() const;
};

enum class SubspaceTag {
    Full,                 // G
    Reduced,              // G'
    Acceptable,           // G_a
    ReducedAcceptable,    // G_a'
    ConfidentAcceptable,  // G_ac
};

const char* to_string(SubspaceTag tag);
SubspaceTag subspace_tag_from_string(const std::string& s);

// Explicit-membership subspace. For ConfidentAcceptable, `categories` and
// `confidences` run parallel to `members`.
struct ContentSubspace {
    ContentSchema schema;
    SubspaceTag tag = SubspaceTag::Full;
    std::vector<ContentVector> members;
    std::vector<int> categories;
    std::vector<double> confidences;

    std::size_t size() const { return members.size(); }
    void validate() const;

    friend bool operator==(const ContentSubspace&, const ContentSubspace&) = default;
};

}  // namespace lbpcg
