#ifndef REPURPOSE_NOIR_HPP
#define REPURPOSE_NOIR_HPP

// Ontological-label retrieval: build a scored reference label set for a
// target from its high-activity compounds, then rank every other compound
// by the mean reference score of its labels.

#include <algorithm>
#include <cstddef>
#include <iterator>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "repurpose/corpus.hpp"
#include "repurpose/error.hpp"
#include "repurpose/tsv.hpp"

namespace repurpose::noir {

struct ReferenceSetConfig {
    std::string target;
    std::string source = sources::kClassyFire;
    std::string activity_type = activity::kEC50;
    double activity_threshold_nM = 30.0;
    std::size_t noise_cap = 200'000;
    std::size_t min_relevant_count = 2;
    std::size_t set_size = 20;

    void validate() const {
        if (target.empty()) throw ConfigError("reference set: target must be given");
        if (source.empty()) throw ConfigError("reference set: source must be given");
        if (!(activity_threshold_nM > 0.0)) throw ConfigError("reference set: activity threshold must be positive");
        if (noise_cap == 0) throw ConfigError("reference set: noise cap must be positive");
        if (min_relevant_count < 2) throw ConfigError("reference set: minimum relevant count must be at least 2");
        if (set_size == 0) throw ConfigError("reference set: set size must be positive");
    }
};

struct TermScore {
    double expected = 0.0;  // E = C * N_relevant / N_corpus
    double score = 0.0;     // (O - E)^2 / E
};

/// Chi-square style term score of one label.
///   observed:    count among the relevant compounds (O)
///   corpus:      count over the whole corpus (C)
inline TermScore term_score(std::size_t observed, std::size_t corpus, std::size_t n_relevant, std::size_t n_corpus) {
    if (n_corpus == 0) throw Error("term score: empty corpus");
    if (corpus == 0) throw Error("term score: term absent from corpus");
    if (n_relevant == 0 || n_relevant > n_corpus) throw Error("term score: relevant set size out of range");
    if (observed > n_relevant) throw Error("term score: observed count exceeds relevant set size");
    const double expected = static_cast<double>(corpus) * static_cast<double>(n_relevant) / static_cast<double>(n_corpus);
    const double diff = static_cast<double>(observed) - expected;
    return {expected, diff * diff / expected};
}

struct ScoredLabel {
    std::string label;
    std::size_t observed = 0;
    double expected = 0.0;
    std::size_t corpus_count = 0;
    double score = 0.0;

    bool operator==(const ScoredLabel&) const = default;
};

struct ReferenceLabelSet {
    ReferenceSetConfig config;
    CompoundSet relevant;
    std::size_t n_corpus = 0;
    /// Labels passing both filters, before truncation to set_size.
    std::size_t candidate_count = 0;
    /// Descending score; ties by higher O, then label.
    std::vector<ScoredLabel> labels;
    /// Set when no label passed the filters.
    bool empty_warning = false;

    /// Score of a reference label, or 0 for labels outside the set.
    double score_of(std::string_view label) const {
        for (const auto& l : labels)
            if (l.label == label) return l.score;
        return 0.0;
    }
};

inline bool ranks_before(const ScoredLabel& a, const ScoredLabel& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.observed != b.observed) return a.observed > b.observed;
    return a.label < b.label;
}

inline ReferenceLabelSet build_reference_set(const Corpus& corpus, const ReferenceSetConfig& config) {
    config.validate();
    ReferenceLabelSet out;
    out.config = config;
    out.n_corpus = corpus.n_corpus();
    out.relevant = compounds_for_target(corpus, config.target, config.activity_type, config.activity_threshold_nM);
    if (out.relevant.empty())
        throw NoRelevantCompoundsError("no relevant compounds for target " + config.target + " with " +
                                       config.activity_type + " < " + tsv::format_double(config.activity_threshold_nM) +
                                       " nM");

    const auto& table = corpus.labels(config.source);
    std::unordered_map<LabelIndex, std::size_t> observed;
    for (const auto c : out.relevant)
        for (const auto l : table.labels_of(c)) ++observed[l];

    std::vector<ScoredLabel> candidates;
    for (const auto& [l, o] : observed) {
        const auto cc = table.corpus_count(l);
        if (o < config.min_relevant_count || cc > config.noise_cap) continue;
        const auto ts = term_score(o, cc, out.relevant.size(), out.n_corpus);
        candidates.push_back({table.name(l), o, ts.expected, cc, ts.score});
    }
    std::sort(candidates.begin(), candidates.end(), ranks_before);
    out.candidate_count = candidates.size();
    if (candidates.size() > config.set_size) candidates.resize(config.set_size);
    out.labels = std::move(candidates);
    out.empty_warning = out.labels.empty();
    return out;
}

struct DocScore {
    double score = 0.0;
    /// L: every label the compound carries under the source.
    std::size_t n_labels = 0;
    std::vector<std::string> matched;
};

/// Mean reference score over all of a document's labels; labels outside
/// the reference set count towards L but contribute zero.
template <typename LabelRange, typename Lookup>
DocScore score_document(const LabelRange& labels, Lookup&& lookup) {
    DocScore out;
    double sum = 0.0;
    for (const auto& label : labels) {
        ++out.n_labels;
        if (const auto* s = lookup(label)) {
            sum += s->second;
            out.matched.push_back(s->first);
        }
    }
    if (out.n_labels > 0) out.score = sum / static_cast<double>(out.n_labels);
    std::sort(out.matched.begin(), out.matched.end());
    return out;
}

inline DocScore doc_score(const std::vector<std::string>& compound_labels, const ReferenceLabelSet& reference) {
    std::unordered_map<std::string, std::pair<std::string, double>> by_name;
    for (const auto& l : reference.labels) by_name.try_emplace(l.label, l.label, l.score);
    std::vector<std::string> unique = compound_labels;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    return score_document(unique, [&](const std::string& label) -> const std::pair<std::string, double>* {
        const auto it = by_name.find(label);
        return it == by_name.end() ? nullptr : &it->second;
    });
}

struct RetrievedCompound {
    std::string compound;
    double score = 0.0;
    std::size_t n_labels = 0;
    std::vector<std::string> matched;
};

struct RetrievalResult {
    std::vector<RetrievedCompound> ranked;
    std::vector<std::string> excluded;
};

/// Scores every compound outside `exclude` against the reference set and
/// keeps the `top_n` best non-zero scores (ties by compound id).
inline RetrievalResult retrieve(const Corpus& corpus, const ReferenceLabelSet& reference, const CompoundSet& exclude,
                                std::size_t top_n) {
    if (top_n == 0) throw ConfigError("retrieve: top_n must be at least 1");
    RetrievalResult out;
    for (const auto c : exclude) out.excluded.push_back(corpus.compound_id(c));
    std::sort(out.excluded.begin(), out.excluded.end());
    if (reference.labels.empty() || !corpus.has_source(reference.config.source)) return out;

    const auto& table = corpus.labels(reference.config.source);
    std::unordered_map<LabelIndex, std::pair<std::string, double>> by_id;
    for (const auto& l : reference.labels)
        if (const auto id = table.find(l.label)) by_id.try_emplace(*id, l.label, l.score);
    const auto lookup = [&](LabelIndex l) -> const std::pair<std::string, double>* {
        const auto it = by_id.find(l);
        return it == by_id.end() ? nullptr : &it->second;
    };

    for (CompoundIndex c = 0; c < corpus.n_compounds(); ++c) {
        if (std::binary_search(exclude.begin(), exclude.end(), c)) continue;
        auto doc = score_document(table.labels_of(c), lookup);
        if (doc.score <= 0.0) continue;
        out.ranked.push_back({corpus.compound_id(c), doc.score, doc.n_labels, std::move(doc.matched)});
    }
    const auto order = [](const RetrievedCompound& a, const RetrievedCompound& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.compound < b.compound;
    };
    if (out.ranked.size() > top_n) {
        std::partial_sort(out.ranked.begin(), out.ranked.begin() + static_cast<std::ptrdiff_t>(top_n),
                          out.ranked.end(), order);
        out.ranked.resize(top_n);
    } else {
        std::sort(out.ranked.begin(), out.ranked.end(), order);
    }
    return out;
}

/// Compounds retrieved by both results, sorted by id.
inline std::vector<std::string> consensus(const RetrievalResult& a, const RetrievalResult& b) {
    std::vector<std::string> ia, ib, out;
    for (const auto& r : a.ranked) ia.push_back(r.compound);
    for (const auto& r : b.ranked) ib.push_back(r.compound);
    std::sort(ia.begin(), ia.end());
    std::sort(ib.begin(), ib.end());
    std::set_intersection(ia.begin(), ia.end(), ib.begin(), ib.end(), std::back_inserter(out));
    return out;
}

/// Intersection over any number of results.
inline std::vector<std::string> consensus(std::span<const RetrievalResult> results) {
    if (results.empty()) return {};
    std::vector<std::string> common;
    for (const auto& r : results.front().ranked) common.push_back(r.compound);
    std::sort(common.begin(), common.end());
    for (const auto& result : results.subspan(1)) {
        std::vector<std::string> ids, next;
        for (const auto& r : result.ranked) ids.push_back(r.compound);
        std::sort(ids.begin(), ids.end());
        std::set_intersection(common.begin(), common.end(), ids.begin(), ids.end(), std::back_inserter(next));
        common = std::move(next);
    }
    return common;
}

// TSV exchange formats

inline void write_reference_set(std::ostream& out, const ReferenceLabelSet& ref) {
    tsv::write_row(out, "label", "source", "O", "E", "C", "score");
    for (const auto& l : ref.labels)
        tsv::write_row(out, l.label, ref.config.source, l.observed, tsv::format_double(l.expected), l.corpus_count,
                       tsv::format_double(l.score));
}

/// Reads a (possibly hand-edited) reference set. Rows keep their file
/// order; all rows must name the same source.
inline ReferenceLabelSet read_reference_set(const std::string& path) {
    tsv::Reader r(path);
    r.expect_header(6, 6);
    ReferenceLabelSet ref;
    ref.config.source.clear();
    std::vector<std::string_view> f;
    while (r.next(f)) {
        if (f.size() != 6) r.fail("expected 6 columns (label, source, O, E, C, score)");
        const std::string source(f[1]);
        if (ref.config.source.empty()) ref.config.source = source;
        if (source != ref.config.source) r.fail("mixed label sources in one reference set");
        const auto o = tsv::parse_int(f[2]);
        const auto e = tsv::parse_double(f[3]);
        const auto c = tsv::parse_int(f[4]);
        const auto s = tsv::parse_double(f[5]);
        if (!o || !e || !c || !s || *o < 0 || *c < 0 || *s < 0.0) r.fail("bad numeric field");
        ref.labels.push_back({std::string(f[0]), static_cast<std::size_t>(*o), *e, static_cast<std::size_t>(*c), *s});
    }
    ref.candidate_count = ref.labels.size();
    ref.empty_warning = ref.labels.empty();
    return ref;
}

inline void write_retrieval(std::ostream& out, const RetrievalResult& result) {
    tsv::write_row(out, "rank", "compound_id", "score", "L", "matched_labels");
    std::size_t rank = 0;
    for (const auto& r : result.ranked) {
        std::string joined;
        for (const auto& m : r.matched) {
            if (!joined.empty()) joined += ';';
            joined += m;
        }
        tsv::write_row(out, ++rank, r.compound, tsv::format_double(r.score), r.n_labels, joined);
    }
}

}  // namespace repurpose::noir

#endif  // REPURPOSE_NOIR_HPP
