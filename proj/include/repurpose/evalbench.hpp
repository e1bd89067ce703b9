#ifndef REPURPOSE_EVALBENCH_HPP
#define REPURPOSE_EVALBENCH_HPP

// Cross-validation protocol for the factor models: k-fold split of the
// stored interactions, held-out RMSE, and recall of held-out targets among
// each compound's top-k predictions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "repurpose/error.hpp"
#include "repurpose/factor.hpp"
#include "repurpose/random.hpp"
#include "repurpose/simkit.hpp"
#include "repurpose/tsv.hpp"

namespace repurpose::eval {

struct Triple {
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;

    bool operator==(const Triple&) const = default;
    auto operator<=>(const Triple&) const = default;
};

struct FoldSplit {
    std::size_t n_folds = 5;
    std::uint64_t seed = 0;
    std::vector<std::vector<Triple>> folds;  // each sorted by (row, col)
};

inline std::vector<Triple> stored_entries(const factor::SparseMatrix& X) {
    std::vector<Triple> out;
    out.reserve(static_cast<std::size_t>(X.nonZeros()));
    for (Eigen::Index i = 0; i < X.outerSize(); ++i)
        for (factor::SparseMatrix::InnerIterator it(X, i); it; ++it)
            out.push_back({static_cast<std::size_t>(it.row()), static_cast<std::size_t>(it.col()), it.value()});
    return out;
}

/// Uniform random partition of the stored entries; fold sizes differ by at
/// most one.
inline FoldSplit split_folds(const factor::SparseMatrix& X, std::size_t n_folds, std::uint64_t seed) {
    if (n_folds < 2) throw ConfigError("split_folds: need at least 2 folds");
    auto entries = stored_entries(X);
    if (entries.size() < n_folds)
        throw Error("split_folds: " + std::to_string(entries.size()) + " stored entries cannot fill " +
                    std::to_string(n_folds) + " folds");
    Rng rng(seed);
    rng.shuffle(entries);
    FoldSplit split{n_folds, seed, std::vector<std::vector<Triple>>(n_folds)};
    for (std::size_t i = 0; i < entries.size(); ++i) split.folds[i % n_folds].push_back(entries[i]);
    for (auto& fold : split.folds) std::sort(fold.begin(), fold.end());
    return split;
}

/// X with the held-out entries removed (they become zeros). Row and column
/// indexes are unchanged.
inline factor::InteractionMatrix training_matrix(const factor::InteractionMatrix& X, std::span<const Triple> held_out) {
    std::set<std::pair<std::size_t, std::size_t>> drop;
    for (const auto& t : held_out) drop.emplace(t.row, t.col);
    std::vector<Eigen::Triplet<double>> keep;
    for (const auto& t : stored_entries(X.values))
        if (!drop.count({t.row, t.col})) keep.emplace_back(static_cast<int>(t.row), static_cast<int>(t.col), t.value);
    factor::InteractionMatrix out{X.compounds, X.targets, {}};
    out.values.resize(X.values.rows(), X.values.cols());
    out.values.setFromTriplets(keep.begin(), keep.end());
    out.values.makeCompressed();
    return out;
}

/// Root mean square error over held-out known entries only.
inline double rmse(const factor::FactorModel& model, std::span<const Triple> held_out) {
    if (held_out.empty()) throw Error("rmse: empty held-out set");
    double sq = 0.0;
    for (const auto& t : held_out) {
        const double d = factor::predict(model, t.row, t.col) - t.value;
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(held_out.size()));
}

/// Target columns ordered by descending predicted score (ties by column),
/// skipping the sorted columns in `exclude`.
inline std::vector<std::size_t> rank_targets(const factor::FactorModel& model, std::size_t row,
                                             std::span<const std::size_t> exclude = {}) {
    const Eigen::VectorXd scores = factor::predict_row(model, row);
    std::vector<std::size_t> order;
    order.reserve(static_cast<std::size_t>(scores.size()));
    for (std::size_t j = 0; j < static_cast<std::size_t>(scores.size()); ++j)
        if (!std::binary_search(exclude.begin(), exclude.end(), j)) order.push_back(j);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[static_cast<Eigen::Index>(a)] > scores[static_cast<Eigen::Index>(b)];
    });
    return order;
}

struct RecallConfig {
    std::vector<std::size_t> k_list{30, 50, 100};
    std::size_t sample_size = 10'000;
    std::size_t min_train_targets = 3;
    std::size_t min_test_targets = 3;
    /// Drop a compound's training targets from its ranking before taking
    /// the top k.
    bool exclude_training_targets = true;
    std::uint64_t seed = 0;

    void validate() const {
        if (k_list.empty()) throw ConfigError("recall: no k values given");
        for (const auto k : k_list)
            if (k == 0) throw ConfigError("recall: k must be at least 1");
        if (sample_size == 0) throw ConfigError("recall: sample size must be positive");
        if (min_train_targets == 0 || min_test_targets == 0)
            throw ConfigError("recall: target-count thresholds must be at least 1");
    }
};

struct RecallStat {
    std::size_t k = 0;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
};

struct RecallReport {
    std::vector<RecallStat> per_k;
    std::size_t eligible = 0;
    std::size_t sampled = 0;
    /// values[i][s]: recall at k_list[i] of the s-th sampled compound.
    std::vector<std::vector<double>> values;
};

inline RecallStat summarize(std::size_t k, std::span<const double> values) {
    RecallStat s{k, 0.0, 0.0};
    if (values.empty()) return s;
    const double n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double var = 0.0;
    for (const auto v : values) var += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(var / n);
    return s;
}

inline RecallReport recall_at_k(const factor::FactorModel& model, const factor::SparseMatrix& train_X,
                                std::span<const Triple> test, const RecallConfig& config) {
    config.validate();
    if (train_X.rows() != model.U.rows() || train_X.cols() != model.V.rows())
        throw Error("recall: training matrix does not match the model");

    std::map<std::size_t, std::vector<std::size_t>> test_targets;
    for (const auto& t : test) test_targets[t.row].push_back(t.col);

    std::vector<std::size_t> eligible;
    for (auto& [row, cols] : test_targets) {
        std::sort(cols.begin(), cols.end());
        cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
        const auto n_train = static_cast<std::size_t>(train_X.row(static_cast<Eigen::Index>(row)).nonZeros());
        if (n_train >= config.min_train_targets && cols.size() >= config.min_test_targets) eligible.push_back(row);
    }
    if (eligible.empty())
        throw Error("recall: no compound has at least " + std::to_string(config.min_train_targets) +
                    " training targets and " + std::to_string(config.min_test_targets) + " test targets");

    RecallReport report;
    report.eligible = eligible.size();
    Rng rng(config.seed);
    rng.shuffle(eligible);
    eligible.resize(std::min(eligible.size(), config.sample_size));
    std::sort(eligible.begin(), eligible.end());

    report.sampled = eligible.size();
    report.values.assign(config.k_list.size(), {});
    std::vector<std::size_t> train_cols;
    for (const auto row : eligible) {
        train_cols.clear();
        if (config.exclude_training_targets)
            for (factor::SparseMatrix::InnerIterator it(train_X, static_cast<Eigen::Index>(row)); it; ++it)
                train_cols.push_back(static_cast<std::size_t>(it.col()));
        const auto ranking = rank_targets(model, row, train_cols);
        const auto& truth = test_targets[row];
        for (std::size_t ki = 0; ki < config.k_list.size(); ++ki) {
            const auto top = std::min(config.k_list[ki], ranking.size());
            std::size_t hits = 0;
            for (std::size_t p = 0; p < top; ++p)
                if (std::binary_search(truth.begin(), truth.end(), ranking[p])) ++hits;
            report.values[ki].push_back(static_cast<double>(hits) / static_cast<double>(truth.size()));
        }
    }
    for (std::size_t ki = 0; ki < config.k_list.size(); ++ki)
        report.per_k.push_back(summarize(config.k_list[ki], report.values[ki]));
    return report;
}

struct TruePositiveCount {
    std::string compound;
    std::size_t count = 0;
};

struct TruePositiveReport {
    std::vector<TruePositiveCount> per_compound;
    std::size_t total = 0;
};

/// Known associations among each probe compound's top-k ranked targets.
inline TruePositiveReport top_k_true_positives(const factor::FactorModel& model,
                                               const std::vector<std::string>& probe_compounds,
                                               const std::set<std::pair<std::string, std::string>>& known,
                                               std::size_t k) {
    if (k == 0) throw ConfigError("top-k: k must be at least 1");
    std::map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < model.compounds.size(); ++i) row_of.emplace(model.compounds[i], i);
    TruePositiveReport out;
    for (const auto& id : probe_compounds) {
        const auto it = row_of.find(id);
        if (it == row_of.end()) throw NotFoundError("top-k: compound not in model: " + id);
        const auto ranking = rank_targets(model, it->second);
        std::size_t count = 0;
        for (std::size_t p = 0; p < std::min(k, ranking.size()); ++p)
            if (known.count({id, model.targets[ranking[p]]})) ++count;
        out.per_compound.push_back({id, count});
        out.total += count;
    }
    return out;
}

struct CvConfig {
    std::size_t n_folds = 5;
    std::uint64_t seed = 0;
    RecallConfig recall;
    /// When non-zero, also collect a rank-recall curve for k = 1..curve_max_k.
    std::size_t curve_max_k = 0;
};

struct EvalReport {
    std::string name;
    std::vector<double> fold_rmse;
    double mean_rmse = 0.0;
    std::vector<RecallStat> recall;  // pooled over all folds' sampled compounds
    std::vector<RecallStat> curve;
    std::size_t sampled = 0;
};

/// k-fold cross validation of NMF (S == nullptr) or CS-NMF.
inline EvalReport cross_validate(const factor::InteractionMatrix& X, const simkit::SimilarityMatrix* S,
                                 const factor::TrainConfig& train, const CvConfig& cv, std::string name) {
    cv.recall.validate();
    const auto split = split_folds(X.values, cv.n_folds, cv.seed);

    RecallConfig recall = cv.recall;
    if (cv.curve_max_k > 0) {
        std::set<std::size_t> ks(recall.k_list.begin(), recall.k_list.end());
        for (std::size_t k = 1; k <= cv.curve_max_k; ++k) ks.insert(k);
        recall.k_list.assign(ks.begin(), ks.end());
    }

    EvalReport report;
    report.name = std::move(name);
    std::vector<std::vector<double>> pooled(recall.k_list.size());
    for (std::size_t f = 0; f < cv.n_folds; ++f) {
        const auto& test = split.folds[f];
        const auto train_X = training_matrix(X, test);
        const auto model = S ? factor::train_csnmf(train_X, *S, train) : factor::train_nmf(train_X, train);
        report.fold_rmse.push_back(rmse(model, test));
        recall.seed = cv.recall.seed + 0x9E3779B97F4A7C15ULL * (f + 1);
        const auto r = recall_at_k(model, train_X.values, test, recall);
        report.sampled += r.sampled;
        for (std::size_t ki = 0; ki < recall.k_list.size(); ++ki)
            pooled[ki].insert(pooled[ki].end(), r.values[ki].begin(), r.values[ki].end());
    }
    report.mean_rmse = std::accumulate(report.fold_rmse.begin(), report.fold_rmse.end(), 0.0) /
                       static_cast<double>(report.fold_rmse.size());
    for (std::size_t ki = 0; ki < recall.k_list.size(); ++ki) {
        const auto stat = summarize(recall.k_list[ki], pooled[ki]);
        if (std::find(cv.recall.k_list.begin(), cv.recall.k_list.end(), stat.k) != cv.recall.k_list.end())
            report.recall.push_back(stat);
        if (cv.curve_max_k > 0 && stat.k <= cv.curve_max_k) report.curve.push_back(stat);
    }
    return report;
}

// Report output

inline void write_report_tsv(std::ostream& out, const std::vector<EvalReport>& reports) {
    tsv::write_row(out, "model", "metric", "k", "mean", "std");
    for (const auto& r : reports) {
        for (std::size_t f = 0; f < r.fold_rmse.size(); ++f)
            tsv::write_row(out, r.name, "RMSE_fold_" + std::to_string(f + 1), "", tsv::format_double(r.fold_rmse[f]), "");
        tsv::write_row(out, r.name, "RMSE", "", tsv::format_double(r.mean_rmse), "");
        for (const auto& s : r.recall)
            tsv::write_row(out, r.name, "recall", s.k, tsv::format_double(s.mean), tsv::format_double(s.std));
        tsv::write_row(out, r.name, "sampled_compounds", "", r.sampled, "");
    }
}

/// Fixed-width table: one column per model, rows RMSE and "Recall at k".
inline void write_report_table(std::ostream& out, const std::vector<EvalReport>& reports) {
    constexpr int kLabelWidth = 14;
    std::size_t width = 12;
    for (const auto& r : reports) width = std::max(width, r.name.size() + 2);
    const auto w = static_cast<int>(width);
    out << std::left << std::setw(kLabelWidth) << "";
    for (const auto& r : reports) out << std::setw(w) << r.name;
    out << '\n';
    const auto fixed = [](double v, int digits) {
        std::ostringstream s;
        s << std::fixed << std::setprecision(digits) << v;
        return s.str();
    };
    out << std::setw(kLabelWidth) << "RMSE";
    for (const auto& r : reports) out << std::setw(w) << fixed(r.mean_rmse, 2);
    out << '\n';
    if (reports.empty()) return;
    for (std::size_t i = 0; i < reports.front().recall.size(); ++i) {
        out << std::setw(kLabelWidth) << ("Recall at " + std::to_string(reports.front().recall[i].k));
        for (const auto& r : reports) {
            const auto& s = r.recall.at(i);
            out << std::setw(w) << (fixed(s.mean, 2) + " (" + fixed(s.std, 2) + ")");
        }
        out << '\n';
    }
}

inline void write_curve(std::ostream& out, std::span<const RecallStat> curve) {
    tsv::write_row(out, "k", "mean_recall", "std");
    for (const auto& s : curve) tsv::write_row(out, s.k, tsv::format_double(s.mean), tsv::format_double(s.std));
}

}  // namespace repurpose::eval

#endif  // REPURPOSE_EVALBENCH_HPP
