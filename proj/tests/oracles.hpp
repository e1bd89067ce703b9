#ifndef REPURPOSE_TESTS_ORACLES_HPP
#define REPURPOSE_TESTS_ORACLES_HPP

// Brute-force reference computations used by the tests. They work from raw
// rows and dense nested vectors and share no code with the library.

#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace repurpose::oracle {

struct RawLabel {
    std::string compound, source, label;
};

/// Distinct compounds carrying `label` under `source`, restricted to
/// `within` when it is non-null.
inline std::size_t count_label(const std::vector<RawLabel>& rows, const std::string& source, const std::string& label,
                               const std::set<std::string>* within = nullptr) {
    std::set<std::string> seen;
    for (const auto& r : rows)
        if (r.source == source && r.label == label && (!within || within->count(r.compound))) seen.insert(r.compound);
    return seen.size();
}

inline std::set<std::string> labels_of(const std::vector<RawLabel>& rows, const std::string& source,
                                       const std::string& compound) {
    std::set<std::string> out;
    for (const auto& r : rows)
        if (r.source == source && r.compound == compound) out.insert(r.label);
    return out;
}

inline double expected_count(double corpus_count, double n_relevant, double n_corpus) {
    return corpus_count * n_relevant / n_corpus;
}

inline double chi_term(double observed, double expected) {
    return (observed - expected) * (observed - expected) / expected;
}

/// Mean over all document labels of the reference score (0 when absent).
inline double doc_score(const std::set<std::string>& labels, const std::map<std::string, double>& reference) {
    if (labels.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& l : labels) {
        const auto it = reference.find(l);
        if (it != reference.end()) sum += it->second;
    }
    return sum / static_cast<double>(labels.size());
}

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    std::set<std::string> u = a;
    u.insert(b.begin(), b.end());
    if (u.empty()) return 0.0;
    std::size_t common = 0;
    for (const auto& x : a) common += b.count(x);
    return static_cast<double>(common) / static_cast<double>(u.size());
}

using Dense = std::vector<std::vector<double>>;

/// 1/2 ||X - U V^T||^2 + lambda/2 * sum over unordered pairs {i, j} of
/// S_ij ||u_i - u_j||^2, all by explicit loops.
inline double objective(const Dense& X, const Dense& U, const Dense& V, const Dense& S, double lambda) {
    double fit = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i)
        for (std::size_t j = 0; j < X[i].size(); ++j) {
            double p = 0.0;
            for (std::size_t k = 0; k < U[i].size(); ++k) p += U[i][k] * V[j][k];
            fit += (X[i][j] - p) * (X[i][j] - p);
        }
    double pen = 0.0;
    for (std::size_t i = 0; i < S.size(); ++i)
        for (std::size_t j = i + 1; j < S.size(); ++j) {
            double d = 0.0;
            for (std::size_t k = 0; k < U[i].size(); ++k) d += (U[i][k] - U[j][k]) * (U[i][k] - U[j][k]);
            pen += S[i][j] * d;
        }
    return 0.5 * fit + 0.5 * lambda * pen;
}

/// Central finite-difference gradient of `objective` with respect to U.
inline Dense gradient_u_fd(const Dense& X, Dense U, const Dense& V, const Dense& S, double lambda, double h) {
    Dense g(U.size(), std::vector<double>(U.empty() ? 0 : U[0].size()));
    for (std::size_t i = 0; i < U.size(); ++i)
        for (std::size_t k = 0; k < U[i].size(); ++k) {
            const double keep = U[i][k];
            U[i][k] = keep + h;
            const double up = objective(X, U, V, S, lambda);
            U[i][k] = keep - h;
            const double down = objective(X, U, V, S, lambda);
            U[i][k] = keep;
            g[i][k] = (up - down) / (2.0 * h);
        }
    return g;
}

}  // namespace repurpose::oracle

#endif  // REPURPOSE_TESTS_ORACLES_HPP
