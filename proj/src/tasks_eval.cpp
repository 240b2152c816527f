#include "latte/tasks_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "latte/error.hpp"

namespace latte {

std::vector<std::size_t> CommunityAssignment::sizes() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(std::max(k, 0)), 0);
  for (int l : labels) {
    if (l < 0 || l >= k) throw Error("community label " + std::to_string(l) + " outside 0.." + std::to_string(k - 1));
    ++out[static_cast<std::size_t>(l)];
  }
  return out;
}

namespace {

double within_sse(const Matrix& points, const Matrix& centroids, const std::vector<int>& labels) {
  double sse = 0.0;
  for (Index i = 0; i < points.rows(); ++i) sse += (points.row(i) - centroids.row(labels[i])).squaredNorm();
  return sse;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iterations) {
  const Index n = points.rows();
  if (k < 1) throw ShapeError("kmeans: k must be positive");
  if (k > n) throw ShapeError("kmeans: k exceeds the number of points");

  std::mt19937_64 rng(seed);
  Matrix centroids(k, points.cols());
  Vector nearest = Vector::Constant(n, std::numeric_limits<double>::infinity());
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);

  std::uniform_int_distribution<Index> first(0, n - 1);
  Index pick = first(rng);
  for (int c = 0; c < k; ++c) {
    if (c > 0) {
      const double total = nearest.sum();
      if (total > 0.0) {
        std::discrete_distribution<Index> draw(nearest.data(), nearest.data() + n);
        pick = draw(rng);
      } else {
        // Only duplicates left: take the first point not used yet.
        pick = 0;
        while (chosen[static_cast<std::size_t>(pick)]) ++pick;
      }
    }
    chosen[static_cast<std::size_t>(pick)] = 1;
    centroids.row(c) = points.row(pick);
    for (Index i = 0; i < n; ++i) nearest(i) = std::min(nearest(i), (points.row(i) - centroids.row(c)).squaredNorm());
  }

  KMeansResult result;
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (points.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (labels[i] != best) {
        labels[i] = best;
        changed = true;
      }
    }
    result.iterations = iter + 1;
    if (!changed) break;

    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      sums.row(labels[i]) += points.row(i);
      ++counts[static_cast<std::size_t>(labels[i])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Index far = -1;
      double far_d = -1.0;
      for (Index i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(labels[i])] < 2) continue;
        const double d = (points.row(i) - centroids.row(labels[i])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far < 0) break;
      const int old = labels[far];
      --counts[static_cast<std::size_t>(old)];
      centroids.row(old) = (centroids.row(old) * static_cast<double>(counts[old] + 1) - points.row(far)) /
                           static_cast<double>(counts[old]);
      labels[far] = c;
      counts[static_cast<std::size_t>(c)] = 1;
      centroids.row(c) = points.row(far);
      changed = true;
    }
    result.sse_history.push_back(within_sse(points, centroids, labels));
  }

  result.assignment = CommunityAssignment{std::move(labels), k};
  result.centroids = std::move(centroids);
  return result;
}

double ncut(const CommunityAssignment& assign, const SparseMatrix& user_adjacency) {
  if (static_cast<std::size_t>(user_adjacency.rows()) != assign.size())
    throw ShapeError("ncut: assignment does not cover every user");
  std::vector<double> cut(static_cast<std::size_t>(assign.k), 0.0);
  std::vector<double> volume(static_cast<std::size_t>(assign.k), 0.0);
  for (Index col = 0; col < user_adjacency.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(user_adjacency, col); it; ++it) {
      const int ci = assign.labels[static_cast<std::size_t>(it.row())];
      volume[static_cast<std::size_t>(ci)] += it.value();
      if (ci != assign.labels[static_cast<std::size_t>(it.col())]) cut[static_cast<std::size_t>(ci)] += it.value();
    }
  }
  double total = 0.0;
  for (int c = 0; c < assign.k; ++c) {
    if (volume[static_cast<std::size_t>(c)] > 0.0) total += cut[static_cast<std::size_t>(c)] / volume[static_cast<std::size_t>(c)];
  }
  return 0.5 * total;
}

Matrix proximity_distance(const Matrix& proximity) {
  if (proximity.rows() != proximity.cols()) throw ShapeError("proximity matrix must be square");
  double top = 0.0;
  for (Index j = 0; j < proximity.cols(); ++j)
    for (Index i = 0; i < proximity.rows(); ++i)
      if (i != j) top = std::max(top, proximity(i, j));
  Matrix d = top > 0.0 ? Matrix((1.0 - proximity.array() / top).matrix())
                       : Matrix::Ones(proximity.rows(), proximity.cols());
  d.diagonal().setZero();
  return d;
}

namespace {

std::vector<std::vector<Index>> members(const CommunityAssignment& assign) {
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(assign.k));
  for (std::size_t i = 0; i < assign.labels.size(); ++i) {
    const int l = assign.labels[i];
    if (l < 0 || l >= assign.k) throw Error("community label outside 0..k-1");
    out[static_cast<std::size_t>(l)].push_back(static_cast<Index>(i));
  }
  std::erase_if(out, [](const auto& m) { return m.empty(); });
  return out;
}

void require_matching(const CommunityAssignment& assign, const Matrix& proximity, const char* what) {
  if (static_cast<std::size_t>(proximity.rows()) != assign.size() ||
      static_cast<std::size_t>(proximity.cols()) != assign.size())
    throw ShapeError(std::string(what) + ": proximity matrix does not match the assignment");
}

double mean_block(const Matrix& d, const std::vector<Index>& a, const std::vector<Index>& b, bool same) {
  double sum = 0.0;
  std::size_t count = 0;
  for (Index i : a) {
    for (Index j : b) {
      if (same && i == j) continue;
      sum += d(i, j);
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace

double ndbi(const CommunityAssignment& assign, const Matrix& proximity) {
  require_matching(assign, proximity, "ndbi");
  const auto groups = members(assign);
  if (groups.size() < 2) throw ShapeError("ndbi: needs at least two non-empty communities");
  const Matrix d = proximity_distance(proximity);
  std::vector<double> intra;
  for (const auto& g : groups) intra.push_back(mean_block(d, g, g, true));

  double dbi = 0.0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < groups.size(); ++j) {
      if (i == j) continue;
      const double inter = mean_block(d, groups[i], groups[j], false);
      const double spread = intra[i] + intra[j];
      const double r = inter > 0.0 ? spread / (2.0 * inter)
                                   : (spread > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      worst = std::max(worst, r);
    }
    dbi += worst;
  }
  dbi /= static_cast<double>(groups.size());
  return 1.0 / (1.0 + dbi);
}

double silhouette(const CommunityAssignment& assign, const Matrix& proximity) {
  require_matching(assign, proximity, "silhouette");
  const auto groups = members(assign);
  if (groups.size() < 2) throw ShapeError("silhouette: needs at least two non-empty communities");
  const Matrix d = proximity_distance(proximity);
  std::vector<std::size_t> group_of(assign.size());
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (Index i : groups[g]) group_of[static_cast<std::size_t>(i)] = g;

  double total = 0.0;
  for (std::size_t i = 0; i < assign.size(); ++i) {
    const auto& own = groups[group_of[i]];
    if (own.size() < 2) continue;
    double a = 0.0;
    for (Index j : own) a += d(static_cast<Index>(i), j);
    a /= static_cast<double>(own.size() - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (g == group_of[i]) continue;
      double s = 0.0;
      for (Index j : groups[g]) s += d(static_cast<Index>(i), j);
      b = std::min(b, s / static_cast<double>(groups[g].size()));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(assign.size());
}

double density(const CommunityAssignment& assign, const SparseMatrix& user_adjacency) {
  if (static_cast<std::size_t>(user_adjacency.rows()) != assign.size())
    throw ShapeError("density: assignment does not cover every user");
  double inside = 0.0;
  double total = 0.0;
  for (Index col = 0; col < user_adjacency.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(user_adjacency, col); it; ++it) {
      total += it.value();
      if (assign.labels[static_cast<std::size_t>(it.row())] == assign.labels[static_cast<std::size_t>(it.col())])
        inside += it.value();
    }
  }
  return total > 0.0 ? inside / total : 0.0;
}

double entropy(const CommunityAssignment& assign) {
  const double n = static_cast<double>(assign.size());
  double h = 0.0;
  for (std::size_t s : assign.sizes()) {
    if (s == 0) continue;
    const double p = static_cast<double>(s) / n;
    h -= p * std::log(p);
  }
  return h;
}

double adjusted_rand_index(const CommunityAssignment& a, const CommunityAssignment& b) {
  if (a.size() != b.size()) throw ShapeError("adjusted_rand_index: assignments differ in size");
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a.labels[i], b.labels[i]}] += 1.0;
    rows[a.labels[i]] += 1.0;
    cols[b.labels[i]] += 1.0;
  }
  auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [_, v] : table) index += choose2(v);
  for (const auto& [_, v] : rows) sum_rows += choose2(v);
  for (const auto& [_, v] : cols) sum_cols += choose2(v);
  const double total = choose2(static_cast<double>(a.size()));
  const double expected = total > 0.0 ? sum_rows * sum_cols / total : 0.0;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

std::vector<double> pair_logits(const Matrix& zu, std::span<const LabeledPair> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  const auto n = static_cast<std::size_t>(zu.rows());
  for (const auto& p : pairs) {
    if (p.a >= n || p.b >= n) throw Error("pair scoring: unknown user index");
    out.push_back(zu.row(static_cast<Index>(p.a)).dot(zu.row(static_cast<Index>(p.b))));
  }
  return out;
}

std::vector<double> score_pairs(const Matrix& zu, std::span<const LabeledPair> pairs) {
  std::vector<double> out = pair_logits(zu, pairs);
  for (double& v : out) v = 1.0 / (1.0 + std::exp(-v));
  return out;
}

double auc(std::span<const double> scores, std::span<const char> labels) {
  if (scores.size() != labels.size()) throw ShapeError("auc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] < scores[y]; });

  double rank_sum = 0.0;
  double positives = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]]) {
        rank_sum += avg_rank;
        positives += 1.0;
      }
    }
    i = j;
  }
  const double negatives = static_cast<double>(scores.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) throw Error("auc: labels contain a single class");
  return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

double precision_at_k(std::span<const double> scores, std::span<const char> labels, std::size_t k) {
  if (scores.size() != labels.size()) throw ShapeError("precision_at_k: scores and labels differ in length");
  const std::size_t top = std::min(k, scores.size());
  if (top == 0) return 0.0;
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });
  std::size_t hits = 0;
  for (std::size_t i = 0; i < top; ++i) hits += labels[order[i]] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(top);
}

std::vector<int> cv_split(std::span<const LabeledPair> pairs, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cv_split: need at least two folds");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < pairs.size(); ++i) (pairs[i].positive ? pos : neg).push_back(i);
  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  std::vector<int> fold(pairs.size(), 0);
  for (std::size_t i = 0; i < pos.size(); ++i) fold[pos[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < neg.size(); ++i) fold[neg[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  return fold;
}

std::vector<std::size_t> sample_positives(std::span<const LabeledPair> pairs, std::span<const std::size_t> train,
                                          double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("sample ratio must lie in (0, 1]");
  std::vector<std::size_t> pos, kept;
  for (std::size_t i : train) (pairs[i].positive ? pos : kept).push_back(i);
  // The epsilon keeps products like 0.3 * 10 from flooring to 2.
  const auto keep = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(pos.size()) + 1e-9));
  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  kept.insert(kept.end(), pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(keep));
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace latte
