#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "repurpose/factor.hpp"
#include "repurpose/random.hpp"
#include "test_util.hpp"

using namespace repurpose;
using namespace repurpose::factor;

namespace {

SparseMatrix sparse_from(const oracle::Dense& d, bool keep_zeros = false) {
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d[i].size(); ++j)
            if (keep_zeros || d[i][j] != 0.0) t.emplace_back(static_cast<int>(i), static_cast<int>(j), d[i][j]);
    SparseMatrix m(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.empty() ? 0 : d[0].size()));
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

DenseMatrix dense_from(const oracle::Dense& d) {
    DenseMatrix m(d.size(), d[0].size());
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d[i].size(); ++j) m(i, j) = d[i][j];
    return m;
}

oracle::Dense random_dense(Rng& rng, std::size_t rows, std::size_t cols, double density, double scale) {
    oracle::Dense d(rows, std::vector<double>(cols, 0.0));
    for (auto& row : d)
        for (auto& x : row)
            if (rng.bernoulli(density)) x = scale * rng.uniform_open_closed();
    return d;
}

oracle::Dense random_similarity(Rng& rng, std::size_t n, double density) {
    oracle::Dense s(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (rng.bernoulli(density)) s[i][j] = s[j][i] = rng.uniform_open_closed();
    return s;
}

double row_distance(const DenseMatrix& U, Eigen::Index a, Eigen::Index b) { return (U.row(a) - U.row(b)).norm(); }

TrainConfig config(std::size_t rank, double lambda, std::size_t iters, double tol, std::uint64_t seed = 1) {
    TrainConfig c;
    c.rank = rank;
    c.lambda = lambda;
    c.max_iters = iters;
    c.rel_tol = tol;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(TransformActivity, Endpoints) {
    EXPECT_EQ(transform_activity(0.0), 10.0);
    EXPECT_EQ(transform_activity(10'000.0), 5.0);
    EXPECT_EQ(transform_activity(10'000.5), 1.0);
    EXPECT_EQ(transform_activity(20'000.0), 1.0);
    EXPECT_EQ(transform_activity(6'000.0), 7.0);
    EXPECT_THROW(transform_activity(-1.0), Error);
    EXPECT_THROW(transform_activity(std::nan("")), Error);
}

namespace {

Corpus interaction_corpus() {
    CorpusBuilder b;
    for (const auto* c : {"c", "a", "b", "d"}) b.add_compound(c);
    b.add_activity("a", "t1", "IC50", 2000.0);
    b.add_activity("b", "t2", "IC50", 20000.0);
    b.add_activity("c", "t1", "IC50", 6000.0);
    b.add_activity("c", "t1", "EC50", 10.0);
    b.add_activity("d", "t3", "EC50", 10.0);
    return std::move(b).build();
}

}  // namespace

TEST(InteractionMatrix, HandBuilt) {
    const auto X = build_interaction_matrix(interaction_corpus());
    EXPECT_EQ(X.compounds, (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(X.targets, (std::vector<std::string>{"t1", "t2"}));
    EXPECT_EQ(X.nnz(), 3u);
    EXPECT_EQ(X.values.coeff(0, 0), 9.0);
    EXPECT_EQ(X.values.coeff(1, 1), 1.0);
    EXPECT_EQ(X.values.coeff(2, 0), 7.0);
    EXPECT_EQ(X.values.coeff(0, 1), 0.0);
}

TEST(InteractionMatrix, SeveralTypesTakeMostPotent) {
    const auto X = build_interaction_matrix(interaction_corpus(), {"IC50", "EC50"});
    EXPECT_EQ(X.rows(), 4u);
    EXPECT_EQ(X.cols(), 3u);
    EXPECT_DOUBLE_EQ(X.values.coeff(2, 0), (20000.0 - 10.0) / 2000.0);
    EXPECT_THROW(build_interaction_matrix(interaction_corpus(), {"LD50"}), NoInteractionsError);
}

TEST(InteractionMatrix, SingleEntry) {
    CorpusBuilder b;
    b.add_compound("x");
    b.add_activity("x", "t", "IC50", 10'000.0);
    const auto X = build_interaction_matrix(std::move(b).build());
    EXPECT_EQ(X.rows(), 1u);
    EXPECT_EQ(X.values.coeff(0, 0), 5.0);
}

TEST(Objective, HandValues) {
    // X = [[1, 0], [0, 1]], U = [[1], [0]], V = [[1], [0]] -> residual 1 at (1,1)
    const auto X = sparse_from({{1, 0}, {0, 1}});
    const auto U = dense_from({{1}, {0}});
    const auto V = dense_from({{1}, {0}});
    EXPECT_EQ(objective(X, U, V, nullptr, 0.0), 0.5);
    // S_01 = 2, ||u0 - u1||^2 = 1 -> penalty 2, lambda/2 * 2 = lambda
    const auto S = sparse_from({{0, 2}, {2, 0}});
    const auto t = objective_terms(X, U, V, &S, 0.25);
    EXPECT_EQ(t.reconstruction, 0.5);
    EXPECT_EQ(t.penalty, 2.0);
    EXPECT_EQ(t.total, 0.75);
}

TEST(Objective, ExactFitAndIdenticalRows) {
    const auto U = dense_from({{1, 2}, {1, 2}, {0.5, 0}});
    const auto V = dense_from({{3, 1}, {0, 2}});
    const DenseMatrix P = U * V.transpose();
    SparseMatrix X = P.sparseView();
    EXPECT_NEAR(objective(X, U, V, nullptr, 0.0), 0.0, 1e-24);
    const auto S = sparse_from({{0, 1, 0}, {1, 0, 0}, {0, 0, 0}});
    EXPECT_EQ(similarity_penalty(U, S), 0.0);
}

TEST(Objective, MatchesOracleOnRandomInputs) {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.below(12), m = 2 + rng.below(9), r = 1 + rng.below(4);
        const auto Xd = random_dense(rng, n, m, 0.4, 10.0);
        const auto Ud = random_dense(rng, n, r, 1.0, 1.0);
        const auto Vd = random_dense(rng, m, r, 1.0, 1.0);
        const auto Sd = random_similarity(rng, n, 0.5);
        const double lambda = rng.uniform() * 3.0;
        const auto X = sparse_from(Xd);
        const auto S = sparse_from(Sd);
        const double got = objective(X, dense_from(Ud), dense_from(Vd), &S, lambda);
        const double want = oracle::objective(Xd, Ud, Vd, Sd, lambda);
        EXPECT_NEAR(got, want, 1e-12 * std::max(1.0, want));
    }
}

TEST(Objective, ShapeMismatch) {
    const auto X = sparse_from({{1, 0}, {0, 1}});
    EXPECT_THROW(objective(X, dense_from({{1}, {0}, {0}}), dense_from({{1}, {0}}), nullptr, 0.0), Error);
    EXPECT_THROW(objective(X, dense_from({{1}, {0}}), dense_from({{1, 0}, {0, 0}}), nullptr, 0.0), Error);
}

TEST(Gradient, MatchesFiniteDifferences) {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 3 + rng.below(6), m = 2 + rng.below(5), r = 1 + rng.below(3);
        const auto Xd = random_dense(rng, n, m, 0.5, 5.0);
        const auto Ud = random_dense(rng, n, r, 1.0, 1.0);
        const auto Vd = random_dense(rng, m, r, 1.0, 1.0);
        const auto Sd = random_similarity(rng, n, 0.6);
        const double lambda = 0.5 + rng.uniform();
        const auto X = sparse_from(Xd);
        const auto S = sparse_from(Sd);
        const auto got = objective_gradient_u(X, dense_from(Ud), dense_from(Vd), &S, lambda);
        const auto want = oracle::gradient_u_fd(Xd, Ud, Vd, Sd, lambda, 1e-5);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < r; ++k)
                EXPECT_NEAR(got(i, k), want[i][k], 1e-6 * std::max(1.0, std::abs(want[i][k])));
    }
}

TEST(Training, RecoversPlantedRankOne) {
    const std::vector<double> a{1, 2, 3, 0.5, 4}, b{2, 1, 0.25, 3};
    oracle::Dense Xd(a.size(), std::vector<double>(b.size()));
    double norm2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) {
            Xd[i][j] = a[i] * b[j];
            norm2 += Xd[i][j] * Xd[i][j];
        }
    const auto f = train_factors(sparse_from(Xd), nullptr, config(1, 0.0, 500, 1e-14));
    EXPECT_LT(f.objective_trace.back(), 1e-6 * norm2);
}

TEST(Training, AllZeroMatrixGoesToZero) {
    const auto f = train_factors(sparse_from({{0, 0}, {0, 0}, {0, 0}}, true), nullptr, config(2, 0.0, 50, 1e-6));
    EXPECT_EQ(f.objective_trace.back(), 0.0);
    EXPECT_TRUE(f.converged);
    EXPECT_EQ(f.U.maxCoeff(), 0.0);
}

TEST(Training, ObjectiveNonIncreasingAndFactorsNonNegative) {
    Rng rng(3);
    for (int trial = 0; trial < 6; ++trial) {
        const std::size_t n = 20 + rng.below(30), m = 8 + rng.below(10);
        const auto X = sparse_from(random_dense(rng, n, m, 0.3, 10.0));
        const auto S = sparse_from(random_similarity(rng, n, 0.2));
        for (const double lambda : {0.0, 0.5, 5.0}) {
            std::size_t calls = 0;
            const auto observe = [&](std::size_t, const DenseMatrix& U, const DenseMatrix& V, double) {
                ++calls;
                EXPECT_GE(U.minCoeff(), 0.0);
                EXPECT_GE(V.minCoeff(), 0.0);
            };
            const auto f = train_factors(X, &S, config(4, lambda, 150, 1e-9, trial), observe);
            EXPECT_EQ(calls + 1, f.objective_trace.size());
            for (std::size_t t = 1; t < f.objective_trace.size(); ++t)
                EXPECT_LE(f.objective_trace[t], f.objective_trace[t - 1] * (1.0 + 1e-12)) << "iteration " << t;
        }
    }
}

TEST(Training, LambdaZeroIsBitIdenticalToNmf) {
    Rng rng(9);
    const auto X = sparse_from(random_dense(rng, 30, 12, 0.3, 10.0));
    const auto S = sparse_from(random_similarity(rng, 30, 0.3));
    const auto cfg = config(5, 0.0, 100, 1e-8);
    const auto plain = train_factors(X, nullptr, cfg);
    const auto reg = train_factors(X, &S, cfg);
    EXPECT_EQ(plain.U, reg.U);
    EXPECT_EQ(plain.V, reg.V);
    EXPECT_EQ(plain.objective_trace, reg.objective_trace);
}

TEST(Training, RegularizerPullsSimilarRowsTogether) {
    Rng rng(21);
    const auto X = sparse_from(random_dense(rng, 12, 8, 0.5, 10.0));
    const auto S = sparse_from({{0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
                                {1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
                                {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
                                {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
                                {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
                                {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
                                {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
                                {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
                                {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
                                {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
                                {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
                                {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}});
    std::vector<double> distance;
    for (const double lambda : {0.0, 1.0, 10.0, 100.0}) {
        const auto f = train_factors(X, &S, config(3, lambda, 300, 1e-10));
        distance.push_back(row_distance(f.U, 0, 1));
        if (distance.size() > 1) {
            EXPECT_LT(distance.back(), distance[distance.size() - 2]) << "lambda " << lambda;
        }
    }
    EXPECT_LT(distance.back(), 0.1 * distance.front());
}

TEST(Training, SameSeedSameModel) {
    Rng rng(2);
    const auto X = sparse_from(random_dense(rng, 15, 6, 0.4, 10.0));
    const auto a = train_factors(X, nullptr, config(3, 0.0, 40, 1e-8, 77));
    const auto b = train_factors(X, nullptr, config(3, 0.0, 40, 1e-8, 77));
    const auto c = train_factors(X, nullptr, config(3, 0.0, 40, 1e-8, 78));
    EXPECT_EQ(a.U, b.U);
    EXPECT_EQ(a.objective_trace, b.objective_trace);
    EXPECT_NE(a.U, c.U);
}

TEST(Training, RejectsBadInput) {
    const auto X = sparse_from({{1, 0, 2}, {0, 1, 0}});
    EXPECT_THROW(train_factors(X, nullptr, config(3, 0.0, 10, 1e-5)), ConfigError);
    EXPECT_THROW(train_factors(X, nullptr, config(0, 0.0, 10, 1e-5)), ConfigError);
    const auto asym = sparse_from({{0, 1}, {0.5, 0}});
    EXPECT_THROW(train_factors(X, &asym, config(1, 1.0, 10, 1e-5)), Error);
    const auto diag = sparse_from({{1, 0}, {0, 0}});
    EXPECT_THROW(train_factors(X, &diag, config(1, 1.0, 10, 1e-5)), Error);
    const auto wrong = sparse_from({{0, 1, 0}, {1, 0, 0}, {0, 0, 0}});
    EXPECT_THROW(train_factors(X, &wrong, config(1, 1.0, 10, 1e-5)), Error);
    EXPECT_THROW(train_factors(sparse_from({{1, -1}, {0, 1}}), nullptr, config(1, 0.0, 10, 1e-5)), Error);
    auto cfg = config(1, -1.0, 10, 1e-5);
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Training, MaxItersBoundsTrace) {
    Rng rng(4);
    const auto X = sparse_from(random_dense(rng, 10, 5, 0.5, 10.0));
    const auto f = train_factors(X, nullptr, config(2, 0.0, 7, 1e-300));
    EXPECT_EQ(f.objective_trace.size(), 8u);
    EXPECT_FALSE(f.converged);
}

namespace {

FactorModel small_model() {
    const auto X = build_interaction_matrix(interaction_corpus(), {"IC50", "EC50"});
    return train_nmf(X, config(2, 0.0, 25, 1e-9, 3));
}

}  // namespace

TEST(Predict, DotProductAndRange) {
    const auto model = small_model();
    EXPECT_EQ(model.similarity, "none");
    EXPECT_DOUBLE_EQ(predict(model, 1, 2), model.U.row(1).dot(model.V.row(2)));
    const auto row = predict_row(model, 2);
    ASSERT_EQ(row.size(), 3);
    for (Eigen::Index j = 0; j < row.size(); ++j) EXPECT_DOUBLE_EQ(row(j), predict(model, 2, j));
    EXPECT_THROW(predict(model, 4, 0), Error);
    EXPECT_THROW(predict(model, 0, 3), Error);
    EXPECT_THROW(predict_row(model, 9), Error);
}

TEST(ModelIo, SaveLoadIsExact) {
    auto model = small_model();
    model.similarity = "jaccard:CF";
    repurpose::testing::TempDir dir;
    std::ostringstream out;
    save_model(out, model);
    const auto path = dir.write("model.tsv", out.str());
    const auto back = load_model(path);
    EXPECT_EQ(back.compounds, model.compounds);
    EXPECT_EQ(back.targets, model.targets);
    EXPECT_EQ(back.U, model.U);
    EXPECT_EQ(back.V, model.V);
    EXPECT_EQ(back.config, model.config);
    EXPECT_EQ(back.similarity, model.similarity);
    EXPECT_EQ(back.objective_trace, model.objective_trace);
    EXPECT_EQ(back.converged, model.converged);
    std::ostringstream again;
    save_model(again, back);
    EXPECT_EQ(again.str(), out.str());
    EXPECT_THROW(load_model(dir.write("bad.tsv", "format\twhat\n")), Error);
    EXPECT_THROW(load_model(dir.file("missing.tsv")), NotFoundError);
}

TEST(Csnmf, IndexMustMatchRows) {
    const auto X = build_interaction_matrix(interaction_corpus(), {"IC50", "EC50"});
    const simkit::SimilarityMatrix wrong({"a", "b"}, 0.0, {{0, 1, 0.5}});
    EXPECT_THROW(train_csnmf(X, wrong, config(1, 1.0, 5, 1e-5)), Error);
    const simkit::SimilarityMatrix right(X.compounds, 0.0, {{0, 1, 0.5}});
    const auto model = train_csnmf(X, right, config(1, 1.0, 5, 1e-5), "jaccard:OC");
    EXPECT_EQ(model.similarity, "jaccard:OC");
}
