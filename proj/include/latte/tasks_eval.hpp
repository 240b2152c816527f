#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "latte/types.hpp"

namespace latte {

// Partition of users into k disjoint communities. Labels are 0-based
// internally; files and user-facing output use 1..k.
struct CommunityAssignment {
  std::vector<int> labels;
  int k = 0;

  std::size_t size() const { return labels.size(); }
  std::vector<std::size_t> sizes() const;
  bool operator==(const CommunityAssignment&) const = default;
};

struct KMeansResult {
  CommunityAssignment assignment;
  Matrix centroids;
  std::vector<double> sse_history;  // within-cluster SSE after each Lloyd update
  int iterations = 0;
};

// k-means++ seeding, then Lloyd iterations until the assignment stops
// changing or max_iterations. Distance ties go to the lowest centroid index;
// an emptied cluster is reseeded with the point farthest from its centroid.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iterations = 300);

// 1/2 sum_j cut(U_j, rest) / vol(U_j); zero-volume communities contribute 0.
double ncut(const CommunityAssignment& assign, const SparseMatrix& user_adjacency);

// Pairwise distance 1 - P(i,j) / max off-diagonal P, zero on the diagonal.
Matrix proximity_distance(const Matrix& proximity);

// 1 / (1 + DBI) over proximity distances, with intra = mean pairwise
// distance inside a community, inter = mean cross-community distance and
// R_ij = (intra_i + intra_j) / (2 inter_ij). Higher is better. Throws
// ShapeError when fewer than two communities are non-empty.
double ndbi(const CommunityAssignment& assign, const Matrix& proximity);

// Mean silhouette over proximity distances; singleton communities score 0.
double silhouette(const CommunityAssignment& assign, const Matrix& proximity);

// Fraction of edges that fall inside a community (0 when there are none).
double density(const CommunityAssignment& assign, const SparseMatrix& user_adjacency);

// Shannon entropy (natural log) of the community size distribution.
double entropy(const CommunityAssignment& assign);

double adjusted_rand_index(const CommunityAssignment& a, const CommunityAssignment& b);

struct LabeledPair {
  std::size_t a = 0;
  std::size_t b = 0;
  bool positive = false;

  bool operator==(const LabeledPair&) const = default;
};

// sigmoid(z_a . z_b) per pair. Throws Error on a user index outside zu.
std::vector<double> score_pairs(const Matrix& zu, std::span<const LabeledPair> pairs);

// z_a . z_b per pair. Orders pairs exactly like score_pairs but keeps apart
// pairs whose sigmoid rounds to 1 in double precision, so rank metrics
// should use it.
std::vector<double> pair_logits(const Matrix& zu, std::span<const LabeledPair> pairs);

// Mann-Whitney AUC with ties counted as one half. Throws Error if only one
// class is present.
double auc(std::span<const double> scores, std::span<const char> labels);

// Fraction of positives among the top min(K, n) scores; ties keep input order.
double precision_at_k(std::span<const double> scores, std::span<const char> labels, std::size_t k = 100);

// Stratified assignment of each pair to one of `folds` folds.
std::vector<int> cv_split(std::span<const LabeledPair> pairs, int folds, std::uint64_t seed);

// Keeps floor(ratio * #positives) randomly chosen positives among `train`
// (indices into pairs) and every negative. Throws ConfigError unless
// 0 < ratio <= 1. Returned indices are sorted.
std::vector<std::size_t> sample_positives(std::span<const LabeledPair> pairs, std::span<const std::size_t> train,
                                          double ratio, std::uint64_t seed);

}  // namespace latte
