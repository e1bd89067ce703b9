#ifndef REPURPOSE_SYNTHETIC_HPP
#define REPURPOSE_SYNTHETIC_HPP

// Planted-cluster corpus generator for desk-scale experiments.
//
// Compounds are split round-robin into clusters. Every cluster owns a
// private label pool per source (the first `core_labels` of it are carried
// by every member) and a set of affine targets. With zero label noise,
// compounds of different clusters share no label.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "repurpose/corpus.hpp"
#include "repurpose/error.hpp"
#include "repurpose/random.hpp"
#include "repurpose/tsv.hpp"

namespace repurpose::synthetic {

struct SyntheticSpec {
    std::size_t n_compounds = 200;
    std::size_t n_targets = 20;
    std::size_t n_clusters = 4;
    /// Labels per compound and source.
    std::size_t labels_per_compound = 6;
    /// Private labels per cluster and source; must be >= labels_per_compound.
    std::size_t label_pool_size = 12;
    /// Pool labels every member of the cluster carries.
    std::size_t core_labels = 2;
    /// 0 means n_targets / n_clusters, rounded up.
    std::size_t targets_per_cluster = 0;
    /// Probability that a compound interacts with one of its cluster's targets.
    double affinity = 0.6;
    /// Probability that a non-core label is swapped for a shared noise label.
    double label_noise = 0.0;
    /// Probability of a weak interaction with any non-cluster target.
    double activity_noise = 0.0;
    std::size_t noise_label_pool = 30;
    std::vector<std::string> sources{sources::kClassyFire, sources::kOntoChem, sources::kMorgan};

    void validate() const {
        if (n_compounds == 0 || n_targets == 0 || n_clusters == 0)
            throw ConfigError("synthetic: compound, target and cluster counts must be positive");
        if (n_clusters > n_compounds) throw ConfigError("synthetic: more clusters than compounds");
        if (n_clusters > n_targets && targets_per_cluster == 0)
            throw ConfigError("synthetic: more clusters than targets; set targets_per_cluster");
        if (labels_per_compound == 0) throw ConfigError("synthetic: labels_per_compound must be positive");
        if (label_pool_size < labels_per_compound)
            throw ConfigError("synthetic: label pool smaller than labels_per_compound");
        if (core_labels == 0 || core_labels > labels_per_compound)
            throw ConfigError("synthetic: core_labels must lie in [1, labels_per_compound]");
        if (targets_per_cluster > n_targets) throw ConfigError("synthetic: targets_per_cluster exceeds n_targets");
        for (const double p : {affinity, label_noise, activity_noise})
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("synthetic: probabilities must lie in [0, 1]");
        if (label_noise > 0.0 && noise_label_pool == 0) throw ConfigError("synthetic: empty noise label pool");
        if (sources.empty()) throw ConfigError("synthetic: no label sources");
    }
};

struct LabelRow {
    std::string compound, source, label;
};

struct ActivityRow {
    std::string compound, target, type;
    double value_nM;
};

struct SyntheticCorpus {
    std::vector<std::string> compounds;
    std::vector<std::string> targets;
    std::vector<std::size_t> cluster_of;                 // per compound
    std::vector<std::vector<std::size_t>> cluster_targets;  // target indexes per cluster
    std::vector<LabelRow> labels;
    std::vector<ActivityRow> activities;
};

namespace detail {

inline std::string padded(const char* prefix, std::size_t value, std::size_t width) {
    auto digits = std::to_string(value);
    if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
    return prefix + digits;
}

inline std::string label_name(const std::string& source, std::size_t cluster, std::size_t slot, std::size_t pool) {
    if (source == sources::kMorgan) return std::to_string(cluster * pool + slot);
    return source + "_cluster" + std::to_string(cluster) + "_label" + std::to_string(slot);
}

inline std::string noise_label_name(const std::string& source, std::size_t slot) {
    if (source == sources::kMorgan) return std::to_string(1'000'000 + slot);
    return source + "_shared" + std::to_string(slot);
}

}  // namespace detail

/// Builds the planted corpus. Potent in-cluster interactions are emitted as
/// IC50 and EC50 records with the same value (log-uniform 1..5000 nM);
/// off-cluster noise interactions are weak IC50 records (10..50 uM).
inline SyntheticCorpus generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    SyntheticCorpus out;
    const auto width_c = std::to_string(spec.n_compounds).size() + 1;
    const auto width_t = std::to_string(spec.n_targets).size() + 1;
    for (std::size_t i = 0; i < spec.n_compounds; ++i) {
        out.compounds.push_back(detail::padded("SYN", i, width_c));
        out.cluster_of.push_back(i % spec.n_clusters);
    }
    for (std::size_t j = 0; j < spec.n_targets; ++j) out.targets.push_back(detail::padded("TGT", j, width_t));

    const std::size_t per_cluster =
        spec.targets_per_cluster > 0 ? spec.targets_per_cluster
                                     : (spec.n_targets + spec.n_clusters - 1) / spec.n_clusters;
    out.cluster_targets.resize(spec.n_clusters);
    if (spec.targets_per_cluster == 0) {
        // contiguous disjoint blocks (the last one may be short)
        for (std::size_t j = 0; j < spec.n_targets; ++j) out.cluster_targets[j / per_cluster].push_back(j);
    } else {
        std::vector<std::size_t> all(spec.n_targets);
        for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
        for (auto& ct : out.cluster_targets) {
            rng.shuffle(all);
            ct.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(per_cluster));
            std::sort(ct.begin(), ct.end());
        }
    }

    std::vector<std::size_t> slots(spec.label_pool_size - spec.core_labels);
    for (std::size_t i = 0; i < spec.n_compounds; ++i) {
        const auto cluster = out.cluster_of[i];
        const auto& id = out.compounds[i];
        for (const auto& source : spec.sources) {
            std::set<std::string> chosen;
            for (std::size_t s = 0; s < spec.core_labels; ++s)
                chosen.insert(detail::label_name(source, cluster, s, spec.label_pool_size));
            for (std::size_t s = 0; s < slots.size(); ++s) slots[s] = spec.core_labels + s;
            rng.shuffle(slots);
            for (std::size_t s = 0; s < spec.labels_per_compound - spec.core_labels; ++s) {
                if (spec.label_noise > 0.0 && rng.bernoulli(spec.label_noise))
                    chosen.insert(detail::noise_label_name(source, rng.below(spec.noise_label_pool)));
                else
                    chosen.insert(detail::label_name(source, cluster, slots[s], spec.label_pool_size));
            }
            for (const auto& label : chosen) out.labels.push_back({id, source, label});
        }

        const auto& affine = out.cluster_targets[cluster];
        for (std::size_t j = 0; j < spec.n_targets; ++j) {
            const bool in_cluster = std::binary_search(affine.begin(), affine.end(), j);
            if (in_cluster) {
                if (!rng.bernoulli(spec.affinity)) continue;
                const double value = std::exp(rng.uniform() * std::log(5000.0));
                out.activities.push_back({id, out.targets[j], activity::kIC50, value});
                out.activities.push_back({id, out.targets[j], activity::kEC50, value});
            } else if (spec.activity_noise > 0.0 && rng.bernoulli(spec.activity_noise)) {
                const double value = 10'000.0 + 40'000.0 * rng.uniform_open_closed();
                out.activities.push_back({id, out.targets[j], activity::kIC50, value});
            }
        }
    }
    return out;
}

inline Corpus to_corpus(const SyntheticCorpus& syn) {
    CorpusBuilder b;
    for (const auto& c : syn.compounds) b.add_compound(c);
    for (const auto& l : syn.labels) b.add_label(l.compound, l.source, l.label);
    for (const auto& a : syn.activities) b.add_activity(a.compound, a.target, a.type, a.value_nM);
    return std::move(b).build();
}

/// Writes compounds.tsv, labels.tsv, activities.tsv and the ground-truth
/// clusters.tsv (`compound_id<TAB>cluster`) into `dir`.
inline void write_synthetic(const SyntheticCorpus& syn, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        auto out = tsv::open_output((dir / "compounds.tsv").string());
        tsv::write_row(out, "compound_id", "smiles");
        for (const auto& c : syn.compounds) tsv::write_row(out, c, "");
    }
    {
        auto out = tsv::open_output((dir / "labels.tsv").string());
        tsv::write_row(out, "compound_id", "source", "label");
        for (const auto& l : syn.labels) tsv::write_row(out, l.compound, l.source, l.label);
    }
    {
        auto out = tsv::open_output((dir / "activities.tsv").string());
        tsv::write_row(out, "compound_id", "target_id", "activity_type", "value_nM");
        for (const auto& a : syn.activities) tsv::write_row(out, a.compound, a.target, a.type, tsv::format_double(a.value_nM));
    }
    {
        auto out = tsv::open_output((dir / "clusters.tsv").string());
        tsv::write_row(out, "compound_id", "cluster");
        for (std::size_t i = 0; i < syn.compounds.size(); ++i) tsv::write_row(out, syn.compounds[i], syn.cluster_of[i]);
    }
}

}  // namespace repurpose::synthetic

#endif  // REPURPOSE_SYNTHETIC_HPP
