#pragma once

#include <filesystem>

#include "lbpcg/cc.hpp"
#include "lbpcg/clustering.hpp"
#include "lbpcg/content.hpp"
#include "lbpcg/ip.hpp"
#include "lbpcg/learners.hpp"
#include "lbpcg/pdc.hpp"

namespace lbpcg {

// Versioned human-readable artifact files: JSON with a leading
// format-version field and an artifact-kind tag. Round trips are bit-exact.
inline constexpr int kFormatVersion = 1;

void save_artifact(const RandomForest& model, const std::filesystem::path& path);
void save_artifact(const KernelRidge& model, const std::filesystem::path& path);
void save_artifact(const PreferenceEnsemble& model,
                   const std::filesystem::path& path);
void save_artifact(const ClusterPartition& partition,
                   const std::filesystem::path& path);
void save_artifact(const ContentSubspace& subspace,
                   const std::filesystem::path& path);
void save_artifact(const PlayerSession& session,
                   const std::filesystem::path& path);
void save_artifact(const CategoryModel& model, const std::filesystem::path& path);

template <class T>
T load_artifact(const std::filesystem::path& path);

template <>
RandomForest load_artifact<RandomForest>(const std::filesystem::path& path);
template <>
KernelRidge load_artifact<KernelRidge>(const std::filesystem::path& path);
template <>
PreferenceEnsemble load_artifact<PreferenceEnsemble>(
    const std::filesystem::path& path);
template <>
ClusterPartition load_artifact<ClusterPartition>(
    const std::filesystem::path& path);
template <>
ContentSubspace load_artifact<ContentSubspace>(const std::filesystem::path& path);
template <>
PlayerSession load_artifact<PlayerSession>(const std::filesystem::path& path);
template <>
CategoryModel load_artifact<CategoryModel>(const std::filesystem::path& path);

}  // namespace lbpcg
