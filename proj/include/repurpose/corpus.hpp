#ifndef REPURPOSE_CORPUS_HPP
#define REPURPOSE_CORPUS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "repurpose/error.hpp"
#include "repurpose/tsv.hpp"

namespace repurpose {

using CompoundIndex = std::uint32_t;
using TargetIndex = std::uint32_t;
using LabelIndex = std::uint32_t;

/// Sorted, duplicate-free list of compound indexes.
using CompoundSet = std::vector<CompoundIndex>;

/// Well-known label sources. Any other non-empty name is accepted as a
/// free-form source.
namespace sources {
inline const std::string kClassyFire = "CF";
inline const std::string kOntoChem = "OC";
inline const std::string kMorgan = "MORGAN";
}  // namespace sources

namespace activity {
inline const std::string kIC50 = "IC50";
inline const std::string kEC50 = "EC50";
inline const std::string kLD50 = "LD50";
}  // namespace activity

struct ActivityRecord {
    CompoundIndex compound = 0;
    TargetIndex target = 0;
    std::string type;
    double value_nM = 0.0;

    bool operator==(const ActivityRecord&) const = default;
};

/// Label index for one source: per-compound label lists and the reverse
/// label -> compounds postings. Both sides are sorted and duplicate-free.
class SourceLabels {
  public:
    std::size_t n_labels() const noexcept { return names_.size(); }
    const std::string& name(LabelIndex label) const { return names_.at(label); }

    std::optional<LabelIndex> find(std::string_view label) const {
        const auto it = ids_.find(std::string(label));
        if (it == ids_.end()) return std::nullopt;
        return it->second;
    }

    std::span<const LabelIndex> labels_of(CompoundIndex compound) const {
        if (compound >= by_compound_.size()) return {};
        return by_compound_[compound];
    }

    std::span<const CompoundIndex> compounds_with(LabelIndex label) const { return postings_.at(label); }

    /// Number of distinct compounds carrying the label (C_i).
    std::size_t corpus_count(LabelIndex label) const { return postings_.at(label).size(); }

    bool operator==(const SourceLabels&) const = default;

  private:
    friend class CorpusBuilder;

    LabelIndex intern(const std::string& label) {
        const auto [it, inserted] = ids_.try_emplace(label, static_cast<LabelIndex>(names_.size()));
        if (inserted) {
            names_.push_back(label);
            postings_.emplace_back();
        }
        return it->second;
    }

    std::vector<std::string> names_;
    std::unordered_map<std::string, LabelIndex> ids_;
    std::vector<std::vector<LabelIndex>> by_compound_;
    std::vector<std::vector<CompoundIndex>> postings_;
};

/// Immutable, indexed store of compounds, targets, activity records and
/// per-source label sets. Built through CorpusBuilder or load_corpus().
class Corpus {
  public:
    std::size_t n_compounds() const noexcept { return compound_ids_.size(); }
    std::size_t n_targets() const noexcept { return target_ids_.size(); }
    /// N_corpus: every ingested compound is a document.
    std::size_t n_corpus() const noexcept { return compound_ids_.size(); }

    const std::string& compound_id(CompoundIndex c) const { return compound_ids_.at(c); }
    const std::string& target_id(TargetIndex t) const { return target_ids_.at(t); }
    const std::string& smiles(CompoundIndex c) const { return smiles_.at(c); }

    std::optional<CompoundIndex> find_compound(std::string_view id) const {
        const auto it = compound_lookup_.find(std::string(id));
        if (it == compound_lookup_.end()) return std::nullopt;
        return it->second;
    }
    std::optional<TargetIndex> find_target(std::string_view id) const {
        const auto it = target_lookup_.find(std::string(id));
        if (it == target_lookup_.end()) return std::nullopt;
        return it->second;
    }
    CompoundIndex compound_index(std::string_view id) const {
        if (auto c = find_compound(id)) return *c;
        throw NotFoundError("unknown compound: " + std::string(id));
    }
    TargetIndex target_index(std::string_view id) const {
        if (auto t = find_target(id)) return *t;
        throw NotFoundError("unknown target: " + std::string(id));
    }

    std::span<const ActivityRecord> activities() const noexcept { return activities_; }
    /// Indexes into activities() of the records for one target.
    std::span<const std::size_t> activities_for_target(TargetIndex t) const { return by_target_.at(t); }

    bool has_source(std::string_view source) const { return sources_.count(std::string(source)) != 0; }
    const SourceLabels& labels(std::string_view source) const {
        const auto it = sources_.find(std::string(source));
        if (it == sources_.end()) throw NotFoundError("unknown label source: " + std::string(source));
        return it->second;
    }
    std::vector<std::string> source_names() const {
        std::vector<std::string> names;
        for (const auto& [name, _] : sources_) names.push_back(name);
        return names;
    }

    /// Label rows as read, before de-duplication.
    std::size_t raw_label_rows() const noexcept { return raw_label_rows_; }
    std::size_t n_label_assignments() const {
        std::size_t total = 0;
        for (const auto& [_, table] : sources_)
            for (LabelIndex l = 0; l < table.n_labels(); ++l) total += table.corpus_count(l);
        return total;
    }

    bool operator==(const Corpus&) const = default;

  private:
    friend class CorpusBuilder;

    std::vector<std::string> compound_ids_;
    std::vector<std::string> smiles_;
    std::unordered_map<std::string, CompoundIndex> compound_lookup_;
    std::vector<std::string> target_ids_;
    std::unordered_map<std::string, TargetIndex> target_lookup_;
    std::vector<ActivityRecord> activities_;
    std::vector<std::vector<std::size_t>> by_target_;
    std::map<std::string, SourceLabels> sources_;
    std::size_t raw_label_rows_ = 0;
};

/// Accumulates rows, validates them, and produces an indexed Corpus.
/// Duplicate label rows collapse; duplicate activity rows for the same
/// (compound, target, type) keep the minimum value.
class CorpusBuilder {
  public:
    CorpusBuilder() {
        for (const auto* s : {&sources::kClassyFire, &sources::kOntoChem, &sources::kMorgan})
            corpus_.sources_.try_emplace(*s);
    }

    CompoundIndex add_compound(const std::string& id, const std::string& smiles = {}) {
        if (id.empty()) throw Error("empty compound id");
        const auto [it, inserted] =
            corpus_.compound_lookup_.try_emplace(id, static_cast<CompoundIndex>(corpus_.compound_ids_.size()));
        if (inserted) {
            corpus_.compound_ids_.push_back(id);
            corpus_.smiles_.push_back(smiles);
        } else if (!smiles.empty()) {
            auto& stored = corpus_.smiles_[it->second];
            if (stored.empty()) {
                stored = smiles;
            } else if (stored != smiles) {
                throw Error("conflicting SMILES for duplicate compound " + id);
            }
        }
        return it->second;
    }

    void add_label(const std::string& compound, const std::string& source, const std::string& label) {
        if (source.empty()) throw Error("empty label source");
        if (label.empty()) throw Error("empty label");
        const auto c = corpus_.find_compound(compound);
        if (!c) throw NotFoundError("label references unknown compound: " + compound);
        auto& table = corpus_.sources_[source];
        label_rows_[source].emplace_back(*c, table.intern(label));
        ++corpus_.raw_label_rows_;
    }

    void add_activity(const std::string& compound, const std::string& target, const std::string& type,
                      double value_nM) {
        if (!std::isfinite(value_nM) || value_nM <= 0.0)
            throw Error("activity value must be positive and finite");
        if (type.empty()) throw Error("empty activity type");
        if (target.empty()) throw Error("empty target id");
        const auto c = corpus_.find_compound(compound);
        if (!c) throw NotFoundError("activity references unknown compound: " + compound);
        const auto [tit, tnew] =
            corpus_.target_lookup_.try_emplace(target, static_cast<TargetIndex>(corpus_.target_ids_.size()));
        if (tnew) corpus_.target_ids_.push_back(target);
        const auto key = std::make_tuple(*c, tit->second, type);
        const auto [ait, anew] = activity_slot_.try_emplace(key, corpus_.activities_.size());
        if (anew) {
            corpus_.activities_.push_back({*c, tit->second, type, value_nM});
        } else {
            auto& rec = corpus_.activities_[ait->second];
            rec.value_nM = std::min(rec.value_nM, value_nM);
        }
    }

    Corpus build() && {
        const auto n = corpus_.compound_ids_.size();
        for (auto& [source, table] : corpus_.sources_) {
            table.by_compound_.assign(n, {});
            for (auto& posting : table.postings_) posting.clear();
            auto& rows = label_rows_[source];
            std::sort(rows.begin(), rows.end());
            rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
            // rows are sorted by compound then label, so both lists come out sorted
            for (const auto& [c, l] : rows) {
                table.by_compound_[c].push_back(l);
                table.postings_[l].push_back(c);
            }
        }
        corpus_.by_target_.assign(corpus_.target_ids_.size(), {});
        for (std::size_t i = 0; i < corpus_.activities_.size(); ++i)
            corpus_.by_target_[corpus_.activities_[i].target].push_back(i);
        return std::move(corpus_);
    }

  private:
    Corpus corpus_;
    std::map<std::string, std::vector<std::pair<CompoundIndex, LabelIndex>>> label_rows_;
    std::map<std::tuple<CompoundIndex, TargetIndex, std::string>, std::size_t> activity_slot_;
};

/// Reads the three TSV inputs (each with a header row; `#` lines are
/// comments) into an indexed Corpus.
inline Corpus load_corpus(const std::string& compounds_path, const std::string& labels_path,
                          const std::string& activities_path) {
    CorpusBuilder builder;
    std::vector<std::string_view> f;

    const auto wrap = [](tsv::Reader& r, auto&& fn) {
        try {
            fn();
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            r.fail(e.what());
        }
    };

    {
        tsv::Reader r(compounds_path);
        r.expect_header(1, 2);
        while (r.next(f)) {
            if (f.size() < 1 || f.size() > 2) r.fail("expected 1-2 columns (compound_id, smiles)");
            const std::string id(f[0]);
            const std::string smiles = f.size() == 2 ? std::string(f[1]) : std::string();
            wrap(r, [&] { builder.add_compound(id, smiles); });
        }
    }
    {
        tsv::Reader r(labels_path);
        r.expect_header(3, 3);
        while (r.next(f)) {
            if (f.size() != 3) r.fail("expected 3 columns (compound_id, source, label)");
            const std::string c(f[0]), s(f[1]), l(f[2]);
            wrap(r, [&] { builder.add_label(c, s, l); });
        }
    }
    {
        tsv::Reader r(activities_path);
        r.expect_header(4, 4);
        while (r.next(f)) {
            if (f.size() != 4) r.fail("expected 4 columns (compound_id, target_id, activity_type, value_nM)");
            const auto value = tsv::parse_double(f[3]);
            if (!value) r.fail("unparseable activity value '" + std::string(f[3]) + "'");
            const std::string c(f[0]), t(f[1]), type(f[2]);
            wrap(r, [&] { builder.add_activity(c, t, type, *value); });
        }
    }
    return std::move(builder).build();
}

/// Compounds with at least one `activity_type` record for `target` whose
/// value is strictly below `max_value_nM`.
inline CompoundSet compounds_for_target(const Corpus& corpus, std::string_view target,
                                        std::string_view activity_type, double max_value_nM) {
    const auto t = corpus.target_index(target);
    CompoundSet out;
    for (const auto i : corpus.activities_for_target(t)) {
        const auto& rec = corpus.activities()[i];
        if (rec.type == activity_type && rec.value_nM < max_value_nM) out.push_back(rec.compound);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// O_i: how many compounds of `compounds` carry `label` under `source`.
inline std::size_t label_count_in_set(const Corpus& corpus, std::string_view source, std::string_view label,
                                      std::span<const CompoundIndex> compounds) {
    const auto& table = corpus.labels(source);
    const auto l = table.find(label);
    if (!l) return 0;
    std::size_t count = 0;
    for (const auto c : table.compounds_with(*l))
        if (std::binary_search(compounds.begin(), compounds.end(), c)) ++count;
    return count;
}

inline CompoundSet all_compounds(const Corpus& corpus) {
    CompoundSet out(corpus.n_compounds());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<CompoundIndex>(i);
    return out;
}

}  // namespace repurpose

#endif  // REPURPOSE_CORPUS_HPP
