#ifndef REPURPOSE_FACTOR_HPP
#define REPURPOSE_FACTOR_HPP

// Nonnegative factorization X ~ U V^T of the compound x target interaction
// matrix, optionally with a compound-similarity penalty
//
//   J = 1/2 ||X - U V^T||_F^2 + lambda/2 * sum_{i<j} S_ij ||u_i - u_j||^2
//
// trained by multiplicative updates. Unstored entries of X are zeros.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "repurpose/corpus.hpp"
#include "repurpose/error.hpp"
#include "repurpose/random.hpp"
#include "repurpose/simkit.hpp"
#include "repurpose/tsv.hpp"

namespace repurpose::factor {

using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Potency to matrix value: (20000 - IC50) / 2000 on [0, 10000] nM,
/// 1 for anything weaker.
inline double transform_activity(double value_nM) {
    if (!std::isfinite(value_nM) || value_nM < 0.0)
        throw Error("transform_activity: value must be finite and nonnegative");
    if (value_nM > 10'000.0) return 1.0;
    return (20'000.0 - value_nM) / 2'000.0;
}

struct InteractionMatrix {
    std::vector<std::string> compounds;  // row ids
    std::vector<std::string> targets;    // column ids
    SparseMatrix values;

    std::size_t rows() const noexcept { return compounds.size(); }
    std::size_t cols() const noexcept { return targets.size(); }
    std::size_t nnz() const noexcept { return static_cast<std::size_t>(values.nonZeros()); }
};

/// Rows and columns are the compounds and targets (sorted by id) with at
/// least one record of an accepted type. When several accepted types exist
/// for one pair, the most potent value is used.
inline InteractionMatrix build_interaction_matrix(const Corpus& corpus,
                                                  const std::vector<std::string>& activity_types = {activity::kIC50}) {
    std::map<std::pair<CompoundIndex, TargetIndex>, double> best;
    for (const auto& rec : corpus.activities()) {
        if (!activity_types.empty() &&
            std::find(activity_types.begin(), activity_types.end(), rec.type) == activity_types.end())
            continue;
        const auto [it, inserted] = best.try_emplace({rec.compound, rec.target}, rec.value_nM);
        if (!inserted) it->second = std::min(it->second, rec.value_nM);
    }
    if (best.empty()) throw NoInteractionsError("no activity records match the interaction filter");

    std::map<std::string, std::size_t> rows, cols;
    for (const auto& [key, _] : best) {
        rows.try_emplace(corpus.compound_id(key.first), 0);
        cols.try_emplace(corpus.target_id(key.second), 0);
    }
    InteractionMatrix out;
    for (auto& [id, pos] : rows) {
        pos = out.compounds.size();
        out.compounds.push_back(id);
    }
    for (auto& [id, pos] : cols) {
        pos = out.targets.size();
        out.targets.push_back(id);
    }
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(best.size());
    for (const auto& [key, value] : best)
        triplets.emplace_back(static_cast<int>(rows[corpus.compound_id(key.first)]),
                              static_cast<int>(cols[corpus.target_id(key.second)]), transform_activity(value));
    out.values.resize(static_cast<Eigen::Index>(out.rows()), static_cast<Eigen::Index>(out.cols()));
    out.values.setFromTriplets(triplets.begin(), triplets.end());
    out.values.makeCompressed();
    return out;
}

struct TrainConfig {
    std::size_t rank = 50;
    double lambda = 0.1;
    std::size_t max_iters = 200;
    double rel_tol = 1e-5;
    double epsilon = 1e-12;
    std::uint64_t seed = 0;

    void validate() const {
        if (rank == 0) throw ConfigError("rank must be positive");
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and nonnegative");
        if (max_iters == 0) throw ConfigError("max_iters must be positive");
        if (!(rel_tol > 0.0)) throw ConfigError("rel_tol must be positive");
        if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    }

    bool operator==(const TrainConfig&) const = default;
};

struct FactorModel {
    std::vector<std::string> compounds;
    std::vector<std::string> targets;
    DenseMatrix U;  // compounds x rank
    DenseMatrix V;  // targets x rank
    TrainConfig config;
    /// Similarity used for regularization ("none" for plain NMF).
    std::string similarity = "none";
    /// Objective at initialization followed by one value per iteration.
    std::vector<double> objective_trace;
    bool converged = false;

    std::size_t iterations() const noexcept { return objective_trace.empty() ? 0 : objective_trace.size() - 1; }
};

struct ObjectiveTerms {
    double reconstruction = 0.0;  // 1/2 ||X - U V^T||^2
    double penalty = 0.0;         // sum_{i<j} S_ij ||u_i - u_j||^2, unscaled
    double total = 0.0;
};

inline void check_shapes(const SparseMatrix& X, const DenseMatrix& U, const DenseMatrix& V, const SparseMatrix* S) {
    if (U.rows() != X.rows() || V.rows() != X.cols() || U.cols() != V.cols())
        throw Error("objective: factor shapes do not match the data matrix");
    if (S && (S->rows() != X.rows() || S->cols() != X.rows()))
        throw Error("objective: similarity matrix does not match the compound index");
}

/// sum_{i<j} S_ij ||u_i - u_j||^2 over a symmetric S.
inline double similarity_penalty(const DenseMatrix& U, const SparseMatrix& S) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < S.outerSize(); ++i)
        for (SparseMatrix::InnerIterator it(S, i); it; ++it)
            if (it.col() > i) total += it.value() * (U.row(i) - U.row(it.col())).squaredNorm();
    return total;
}

inline ObjectiveTerms objective_terms(const SparseMatrix& X, const DenseMatrix& U, const DenseMatrix& V,
                                      const SparseMatrix* S, double lambda) {
    check_shapes(X, U, V, S);
    ObjectiveTerms out;
    Eigen::VectorXd residual(X.cols());
    double sq = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        residual.noalias() = V * U.row(i).transpose();
        for (SparseMatrix::InnerIterator it(X, i); it; ++it) residual[it.col()] -= it.value();
        sq += residual.squaredNorm();
    }
    out.reconstruction = 0.5 * sq;
    if (S) out.penalty = similarity_penalty(U, *S);
    out.total = out.reconstruction + 0.5 * lambda * out.penalty;
    return out;
}

inline double objective(const SparseMatrix& X, const DenseMatrix& U, const DenseMatrix& V, const SparseMatrix* S,
                        double lambda) {
    return objective_terms(X, U, V, S, lambda).total;
}

/// dJ/dU = (U V^T - X) V + lambda (D - S) U.
inline DenseMatrix objective_gradient_u(const SparseMatrix& X, const DenseMatrix& U, const DenseMatrix& V,
                                        const SparseMatrix* S, double lambda) {
    check_shapes(X, U, V, S);
    DenseMatrix grad = U * (V.transpose() * V);
    grad -= X * V;
    if (S && lambda != 0.0) {
        const Eigen::VectorXd degree = *S * Eigen::VectorXd::Ones(S->cols());
        grad += lambda * (degree.asDiagonal() * U - *S * U);
    }
    return grad;
}

/// Converts a similarity matrix into the sparse operator used by training.
inline SparseMatrix to_sparse(const simkit::SimilarityMatrix& sim) {
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t i = 0; i < sim.size(); ++i)
        for (const auto& e : sim.row(i)) triplets.emplace_back(static_cast<int>(i), static_cast<int>(e.col), e.value);
    const auto n = static_cast<Eigen::Index>(sim.size());
    SparseMatrix S(n, n);
    S.setFromTriplets(triplets.begin(), triplets.end());
    S.makeCompressed();
    return S;
}

/// Called after every iteration with (iteration, U, V, objective).
using IterationObserver = std::function<void(std::size_t, const DenseMatrix&, const DenseMatrix&, double)>;

struct Factors {
    DenseMatrix U;
    DenseMatrix V;
    std::vector<double> objective_trace;
    bool converged = false;
};

/// Multiplicative updates
///   U <- U o (X V + lambda S U) / (U V^T V + lambda D U + eps)
///   V <- V o (X^T U) / (V U^T U + eps)
/// With S == nullptr the similarity terms are absent (plain NMF). With
/// lambda == 0 they add exact zeros, so the iterates match plain NMF bit
/// for bit.
inline Factors train_factors(const SparseMatrix& X, const SparseMatrix* S, const TrainConfig& config,
                             const IterationObserver& observe = {}) {
    config.validate();
    const auto n = X.rows();
    const auto m = X.cols();
    const auto r = static_cast<Eigen::Index>(config.rank);
    if (n == 0 || m == 0) throw Error("training: empty data matrix");
    if (r > std::min(n, m))
        throw ConfigError("rank " + std::to_string(config.rank) + " exceeds min(rows, cols) = " +
                          std::to_string(std::min(n, m)));
    for (Eigen::Index k = 0; k < X.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(X, k); it; ++it)
            if (!(it.value() >= 0.0) || !std::isfinite(it.value()))
                throw Error("training: data matrix must be finite and nonnegative");

    Eigen::VectorXd degree;
    if (S) {
        if (S->rows() != n || S->cols() != n) throw Error("similarity matrix does not match the compound rows");
        const SparseMatrix St = S->transpose();
        if (SparseMatrix(*S - St).norm() != 0.0)
            throw Error("similarity matrix is not symmetric");
        for (Eigen::Index k = 0; k < S->outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(*S, k); it; ++it) {
                if (it.value() < 0.0) throw Error("similarity matrix has negative entries");
                if (it.row() == it.col() && it.value() != 0.0) throw Error("similarity matrix has a nonzero diagonal");
            }
        degree = *S * Eigen::VectorXd::Ones(n);
    }
    const double lambda = S ? config.lambda : 0.0;

    const double mean = X.sum() / (static_cast<double>(n) * static_cast<double>(m));
    const double scale = mean > 0.0 ? std::sqrt(mean / static_cast<double>(r)) : 1.0;
    Rng rng(config.seed);
    Factors f;
    f.U.resize(n, r);
    f.V.resize(m, r);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < r; ++k) f.U(i, k) = scale * rng.uniform_open_closed();
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index k = 0; k < r; ++k) f.V(j, k) = scale * rng.uniform_open_closed();

    const SparseMatrix Xt = X.transpose();
    double previous = objective(X, f.U, f.V, S, lambda);
    f.objective_trace.push_back(previous);

    DenseMatrix numer_u(n, r), denom_u(n, r), numer_v(m, r), denom_v(m, r);
    for (std::size_t iter = 1; iter <= config.max_iters; ++iter) {
        numer_u.noalias() = X * f.V;
        denom_u.noalias() = f.U * (f.V.transpose() * f.V);
        if (S) {
            numer_u += lambda * (*S * f.U);
            denom_u += lambda * (degree.asDiagonal() * f.U);
        }
        denom_u.array() += config.epsilon;
        f.U.array() *= numer_u.array() / denom_u.array();

        numer_v.noalias() = Xt * f.U;
        denom_v.noalias() = f.V * (f.U.transpose() * f.U);
        denom_v.array() += config.epsilon;
        f.V.array() *= numer_v.array() / denom_v.array();

        if (!f.U.allFinite() || !f.V.allFinite())
            throw NumericalError("non-finite factor entry at iteration " + std::to_string(iter));
        assert(f.U.minCoeff() >= 0.0 && f.V.minCoeff() >= 0.0);

        const double current = objective(X, f.U, f.V, S, lambda);
        if (!std::isfinite(current))
            throw NumericalError("non-finite objective at iteration " + std::to_string(iter));
        f.objective_trace.push_back(current);
        if (observe) observe(iter, f.U, f.V, current);

        if (previous <= 0.0 || (previous - current) / previous < config.rel_tol) {
            f.converged = true;
            break;
        }
        previous = current;
    }
    return f;
}

inline FactorModel make_model(const InteractionMatrix& X, Factors&& f, const TrainConfig& config,
                              std::string similarity) {
    FactorModel model;
    model.compounds = X.compounds;
    model.targets = X.targets;
    model.U = std::move(f.U);
    model.V = std::move(f.V);
    model.config = config;
    model.similarity = std::move(similarity);
    model.objective_trace = std::move(f.objective_trace);
    model.converged = f.converged;
    return model;
}

inline FactorModel train_nmf(const InteractionMatrix& X, const TrainConfig& config,
                             const IterationObserver& observe = {}) {
    return make_model(X, train_factors(X.values, nullptr, config, observe), config, "none");
}

/// Similarity-regularized NMF. `S` must be indexed exactly like X's rows.
inline FactorModel train_csnmf(const InteractionMatrix& X, const simkit::SimilarityMatrix& S,
                               const TrainConfig& config, const std::string& similarity_name = "custom",
                               const IterationObserver& observe = {}) {
    if (S.compounds() != X.compounds) throw Error("similarity matrix index does not match the interaction rows");
    const auto op = to_sparse(S);
    return make_model(X, train_factors(X.values, &op, config, observe), config, similarity_name);
}

inline double predict(const FactorModel& model, std::size_t compound_row, std::size_t target_col) {
    if (compound_row >= static_cast<std::size_t>(model.U.rows()) ||
        target_col >= static_cast<std::size_t>(model.V.rows()))
        throw Error("predict: index out of range");
    return model.U.row(static_cast<Eigen::Index>(compound_row)).dot(model.V.row(static_cast<Eigen::Index>(target_col)));
}

/// Predicted score of every target for one compound row.
inline Eigen::VectorXd predict_row(const FactorModel& model, std::size_t compound_row) {
    if (compound_row >= static_cast<std::size_t>(model.U.rows())) throw Error("predict: index out of range");
    return model.V * model.U.row(static_cast<Eigen::Index>(compound_row)).transpose();
}

// Model container: one record per line, tab separated, doubles written in
// shortest round-trip form so a save/load cycle is exact.

inline void save_model(std::ostream& out, const FactorModel& model) {
    tsv::write_row(out, "format", "repurpose-factor-model", 1);
    tsv::write_row(out, "config", "rank", model.config.rank);
    tsv::write_row(out, "config", "lambda", tsv::format_double(model.config.lambda));
    tsv::write_row(out, "config", "max_iters", model.config.max_iters);
    tsv::write_row(out, "config", "rel_tol", tsv::format_double(model.config.rel_tol));
    tsv::write_row(out, "config", "epsilon", tsv::format_double(model.config.epsilon));
    tsv::write_row(out, "config", "seed", model.config.seed);
    tsv::write_row(out, "meta", "similarity", model.similarity);
    tsv::write_row(out, "meta", "converged", model.converged ? 1 : 0);
    for (std::size_t i = 0; i < model.objective_trace.size(); ++i)
        tsv::write_row(out, "trace", i, tsv::format_double(model.objective_trace[i]));
    for (std::size_t i = 0; i < model.compounds.size(); ++i) tsv::write_row(out, "compound", i, model.compounds[i]);
    for (std::size_t j = 0; j < model.targets.size(); ++j) tsv::write_row(out, "target", j, model.targets[j]);
    const auto dump = [&](const char* tag, const DenseMatrix& M) {
        for (Eigen::Index i = 0; i < M.rows(); ++i) {
            out << tag << '\t' << i;
            for (Eigen::Index k = 0; k < M.cols(); ++k) out << '\t' << tsv::format_double(M(i, k));
            out << '\n';
        }
    };
    dump("U", model.U);
    dump("V", model.V);
}

inline FactorModel load_model(const std::string& path) {
    tsv::Reader r(path);
    FactorModel model;
    std::vector<std::string_view> f;
    std::vector<std::vector<double>> u_rows, v_rows;
    bool saw_format = false;

    const auto as_size = [&](std::string_view s) {
        const auto v = tsv::parse_int(s);
        if (!v || *v < 0) r.fail("expected a nonnegative integer, got '" + std::string(s) + "'");
        return static_cast<std::size_t>(*v);
    };
    const auto as_double = [&](std::string_view s) {
        const auto v = tsv::parse_double(s);
        if (!v) r.fail("expected a number, got '" + std::string(s) + "'");
        return *v;
    };
    const auto expect_next = [&](std::size_t index, std::size_t current) {
        if (index != current) r.fail("records out of order");
    };

    while (r.next(f)) {
        if (f.size() < 3) r.fail("short record");
        const auto tag = f[0];
        if (tag == "format") {
            if (f[1] != "repurpose-factor-model" || f[2] != "1") r.fail("unsupported model format");
            saw_format = true;
        } else if (tag == "config") {
            const auto key = f[1];
            if (key == "rank") model.config.rank = as_size(f[2]);
            else if (key == "lambda") model.config.lambda = as_double(f[2]);
            else if (key == "max_iters") model.config.max_iters = as_size(f[2]);
            else if (key == "rel_tol") model.config.rel_tol = as_double(f[2]);
            else if (key == "epsilon") model.config.epsilon = as_double(f[2]);
            else if (key == "seed") model.config.seed = as_size(f[2]);
            else r.fail("unknown config key '" + std::string(key) + "'");
        } else if (tag == "meta") {
            if (f[1] == "similarity") model.similarity = std::string(f[2]);
            else if (f[1] == "converged") model.converged = f[2] == "1";
            else r.fail("unknown meta key");
        } else if (tag == "trace") {
            expect_next(as_size(f[1]), model.objective_trace.size());
            model.objective_trace.push_back(as_double(f[2]));
        } else if (tag == "compound") {
            expect_next(as_size(f[1]), model.compounds.size());
            model.compounds.emplace_back(f[2]);
        } else if (tag == "target") {
            expect_next(as_size(f[1]), model.targets.size());
            model.targets.emplace_back(f[2]);
        } else if (tag == "U" || tag == "V") {
            auto& rows = tag == "U" ? u_rows : v_rows;
            expect_next(as_size(f[1]), rows.size());
            if (f.size() - 2 != model.config.rank) r.fail("factor row width does not match rank");
            auto& row = rows.emplace_back();
            for (std::size_t k = 2; k < f.size(); ++k) row.push_back(as_double(f[k]));
        } else {
            r.fail("unknown record '" + std::string(tag) + "'");
        }
    }
    if (!saw_format) r.fail("missing format record");
    if (u_rows.size() != model.compounds.size() || v_rows.size() != model.targets.size())
        r.fail("factor rows do not match the compound/target index");
    const auto r_cols = static_cast<Eigen::Index>(model.config.rank);
    const auto fill = [&](DenseMatrix& M, const std::vector<std::vector<double>>& rows) {
        M.resize(static_cast<Eigen::Index>(rows.size()), r_cols);
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (Eigen::Index k = 0; k < r_cols; ++k) M(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<std::size_t>(k)];
    };
    fill(model.U, u_rows);
    fill(model.V, v_rows);
    return model;
}

}  // namespace repurpose::factor

#endif  // REPURPOSE_FACTOR_HPP
