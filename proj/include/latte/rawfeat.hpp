#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "latte/hetgraph.hpp"
#include "latte/types.hpp"

namespace latte {

struct FeatureBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t width = 0;

  bool operator==(const FeatureBlock&) const = default;
};

// Column layout of the raw attribute vectors. User vectors are
// [name, gender, age, hometown]; post vectors [checkin, temporal, word, topic].
// Vocabularies are sorted lexicographically.
struct FeatureSchema {
  std::vector<FeatureBlock> user_blocks;
  std::vector<FeatureBlock> post_blocks;

  std::vector<std::string> name_vocab;
  std::vector<std::string> gender_vocab;
  std::vector<std::string> hometown_vocab;
  std::vector<std::string> location_vocab;
  std::vector<std::string> word_vocab;
  std::size_t num_topics = 0;

  std::size_t user_width() const;
  std::size_t post_width() const;
  // Shared autoencoder input width: user blocks followed by post blocks.
  std::size_t combined_width() const { return user_width() + post_width(); }

  const FeatureBlock& user_block(std::string_view name) const;
  const FeatureBlock& post_block(std::string_view name) const;

  bool operator==(const FeatureSchema&) const = default;
};

inline constexpr std::size_t kHoursPerDay = 24;

struct FeatureMatrix {
  Matrix values;                 // rows follow `ids`
  std::vector<std::string> ids;
  std::vector<FeatureBlock> blocks;
};

FeatureSchema build_vocab(const HetGraph& g);

// Binary bag encodings; age copied raw into its scalar slot. Missing
// attributes leave their block zero.
FeatureMatrix user_features(const HetGraph& g, const FeatureSchema& schema);

// TF-IDF check-ins, one-hot hour, TF-IDF words, ingested topic confidences.
FeatureMatrix post_features(const HetGraph& g, const FeatureSchema& schema);

// One row per node in graph order. User rows fill the user columns and leave
// the post columns zero, and vice versa.
FeatureMatrix combined_features(const HetGraph& g, const FeatureSchema& schema);

// tf * (log((1+N)/(1+df)) + 1) with N rows (documents) and df the number of
// rows with a nonzero count in the column.
Matrix tfidf(const Matrix& counts);

// Per-column min-max scaling into [0,1]. Constant columns map to 0.
struct ColumnScaler {
  Vector lo;
  Vector hi;

  static ColumnScaler fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

}  // namespace latte
