#ifndef REPURPOSE_SIMKIT_HPP
#define REPURPOSE_SIMKIT_HPP

#include <algorithm>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "repurpose/corpus.hpp"
#include "repurpose/error.hpp"
#include "repurpose/tsv.hpp"

namespace repurpose::simkit {

/// Set of interned label ids of one compound under one source.
struct Fingerprint {
    CompoundIndex compound = 0;
    std::vector<LabelIndex> bits;  // sorted, unique
};

inline Fingerprint fingerprint(const Corpus& corpus, std::string_view source, CompoundIndex compound) {
    const auto bits = corpus.labels(source).labels_of(compound);
    return {compound, {bits.begin(), bits.end()}};
}

/// |A n B| / |A u B| over sorted unique ranges; 0 when both are empty.
template <typename RangeA, typename RangeB>
double jaccard_sorted(const RangeA& a, const RangeB& b) {
    std::size_t common = 0;
    auto ia = std::begin(a);
    auto ib = std::begin(b);
    while (ia != std::end(a) && ib != std::end(b)) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++common;
            ++ia;
            ++ib;
        }
    }
    const auto n_union = static_cast<std::size_t>(std::size(a)) + static_cast<std::size_t>(std::size(b)) - common;
    return n_union == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(n_union);
}

inline double jaccard(const Fingerprint& a, const Fingerprint& b) { return jaccard_sorted(a.bits, b.bits); }

/// Sparse symmetric compound-compound similarity with an empty diagonal.
/// Rows are stored in CSR form with both (i, j) and (j, i) present so a
/// row scan sees every neighbour.
class SimilarityMatrix {
  public:
    struct Entry {
        std::size_t col;
        double value;
    };

    SimilarityMatrix() = default;

    /// `pairs` holds (i, j, s) with i != j, each unordered pair at most once.
    SimilarityMatrix(std::vector<std::string> compounds, double threshold,
                     const std::vector<std::tuple<std::size_t, std::size_t, double>>& pairs)
        : compounds_(std::move(compounds)), threshold_(threshold) {
        const auto n = compounds_.size();
        std::vector<std::size_t> degree(n, 0);
        for (const auto& [i, j, s] : pairs) {
            if (i == j || i >= n || j >= n) throw Error("similarity matrix: bad pair index");
            ++degree[i];
            ++degree[j];
        }
        row_ptr_.assign(n + 1, 0);
        for (std::size_t i = 0; i < n; ++i) row_ptr_[i + 1] = row_ptr_[i] + degree[i];
        entries_.resize(row_ptr_[n]);
        std::vector<std::size_t> fill(row_ptr_.begin(), row_ptr_.end() - 1);
        for (const auto& [i, j, s] : pairs) {
            entries_[fill[i]++] = {j, s};
            entries_[fill[j]++] = {i, s};
        }
        for (std::size_t i = 0; i < n; ++i)
            std::sort(entries_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]),
                      entries_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]),
                      [](const Entry& a, const Entry& b) { return a.col < b.col; });
        n_pairs_ = pairs.size();
    }

    std::size_t size() const noexcept { return compounds_.size(); }
    const std::vector<std::string>& compounds() const noexcept { return compounds_; }
    double threshold() const noexcept { return threshold_; }
    /// Number of stored unordered pairs.
    std::size_t n_pairs() const noexcept { return n_pairs_; }

    std::span<const Entry> row(std::size_t i) const {
        return std::span<const Entry>(entries_).subspan(row_ptr_.at(i), row_ptr_.at(i + 1) - row_ptr_[i]);
    }

    double at(std::size_t i, std::size_t j) const {
        const auto r = row(i);
        const auto it =
            std::lower_bound(r.begin(), r.end(), j, [](const Entry& e, std::size_t col) { return e.col < col; });
        return (it != r.end() && it->col == j) ? it->value : 0.0;
    }

    /// Row sums (the degree matrix D of the similarity graph).
    std::vector<double> degrees() const {
        std::vector<double> d(size(), 0.0);
        for (std::size_t i = 0; i < size(); ++i)
            for (const auto& e : row(i)) d[i] += e.value;
        return d;
    }

  private:
    std::vector<std::string> compounds_;
    double threshold_ = 0.0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<Entry> entries_;
    std::size_t n_pairs_ = 0;
};

/// Pairwise Jaccard similarity over `compound_index` (ids) for one label
/// source, keeping pairs with similarity > 0 and >= `threshold`.
/// Candidate pairs come from the label postings, so pairs sharing no
/// label are never visited.
inline SimilarityMatrix build_similarity_matrix(const Corpus& corpus, std::string_view source,
                                                const std::vector<std::string>& compound_index, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("similarity threshold must lie in [0, 1]");
    const auto& table = corpus.labels(source);
    const auto n = compound_index.size();

    std::vector<CompoundIndex> corpus_idx(n);
    std::vector<std::ptrdiff_t> position(corpus.n_compounds(), -1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = corpus.find_compound(compound_index[i]);
        if (!c) throw NotFoundError("similarity matrix: unknown compound " + compound_index[i]);
        if (position[*c] >= 0) throw ConfigError("similarity matrix: duplicate compound " + compound_index[i]);
        corpus_idx[i] = *c;
        position[*c] = static_cast<std::ptrdiff_t>(i);
    }

    std::vector<std::tuple<std::size_t, std::size_t, double>> pairs;
    std::vector<std::size_t> overlap(n, 0);
    std::vector<std::size_t> touched;
    for (std::size_t i = 0; i < n; ++i) {
        const auto labels_i = table.labels_of(corpus_idx[i]);
        touched.clear();
        for (const auto l : labels_i) {
            for (const auto c : table.compounds_with(l)) {
                const auto j = position[c];
                if (j <= static_cast<std::ptrdiff_t>(i)) continue;
                if (overlap[static_cast<std::size_t>(j)]++ == 0) touched.push_back(static_cast<std::size_t>(j));
            }
        }
        std::sort(touched.begin(), touched.end());
        for (const auto j : touched) {
            const auto common = overlap[j];
            overlap[j] = 0;
            const auto n_union = labels_i.size() + table.labels_of(corpus_idx[j]).size() - common;
            const double s = static_cast<double>(common) / static_cast<double>(n_union);
            if (s >= threshold) pairs.emplace_back(i, j, s);
        }
    }
    return SimilarityMatrix(compound_index, threshold, pairs);
}

/// `compound_i<TAB>compound_j<TAB>similarity`, i < j lexicographically.
inline void write_similarity(std::ostream& out, const SimilarityMatrix& s) {
    std::vector<std::tuple<std::string, std::string, double>> rows;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (const auto& e : s.row(i))
            if (s.compounds()[i] < s.compounds()[e.col]) rows.emplace_back(s.compounds()[i], s.compounds()[e.col], e.value);
    std::sort(rows.begin(), rows.end());
    tsv::write_row(out, "compound_i", "compound_j", "similarity");
    for (const auto& [a, b, v] : rows) tsv::write_row(out, a, b, tsv::format_double(v));
}

}  // namespace repurpose::simkit

#endif  // REPURPOSE_SIMKIT_HPP
