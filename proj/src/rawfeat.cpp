#include "latte/rawfeat.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "latte/error.hpp"

namespace latte {

namespace {

std::size_t total_width(const std::vector<FeatureBlock>& blocks) {
  return blocks.empty() ? 0 : blocks.back().offset + blocks.back().width;
}

const FeatureBlock& find_block(const std::vector<FeatureBlock>& blocks, std::string_view name) {
  for (const auto& b : blocks) {
    if (b.name == name) return b;
  }
  throw Error("no feature block named '" + std::string(name) + "'");
}

std::vector<FeatureBlock> lay_out(std::initializer_list<std::pair<const char*, std::size_t>> widths) {
  std::vector<FeatureBlock> out;
  std::size_t offset = 0;
  for (auto [name, w] : widths) {
    out.push_back({name, offset, w});
    offset += w;
  }
  return out;
}

std::size_t position(const std::vector<std::string>& vocab, const std::string& token) {
  auto it = std::lower_bound(vocab.begin(), vocab.end(), token);
  if (it == vocab.end() || *it != token) throw Error("token '" + token + "' missing from vocabulary");
  return static_cast<std::size_t>(it - vocab.begin());
}

}  // namespace

std::size_t FeatureSchema::user_width() const { return total_width(user_blocks); }
std::size_t FeatureSchema::post_width() const { return total_width(post_blocks); }

const FeatureBlock& FeatureSchema::user_block(std::string_view name) const {
  return find_block(user_blocks, name);
}
const FeatureBlock& FeatureSchema::post_block(std::string_view name) const {
  return find_block(post_blocks, name);
}

FeatureSchema build_vocab(const HetGraph& g) {
  std::set<std::string> names, genders, hometowns, locations, words;
  for (std::size_t u = 0; u < g.num_users(); ++u) {
    const auto& a = g.user_attrs(u);
    names.insert(a.name.begin(), a.name.end());
    if (!a.gender.empty()) genders.insert(a.gender);
    if (!a.hometown.empty()) hometowns.insert(a.hometown);
  }
  for (std::size_t p = 0; p < g.num_posts(); ++p) {
    const auto& a = g.post_attrs(p);
    locations.insert(a.checkins.begin(), a.checkins.end());
    words.insert(a.words.begin(), a.words.end());
  }

  FeatureSchema s;
  s.name_vocab.assign(names.begin(), names.end());
  s.gender_vocab.assign(genders.begin(), genders.end());
  s.hometown_vocab.assign(hometowns.begin(), hometowns.end());
  s.location_vocab.assign(locations.begin(), locations.end());
  s.word_vocab.assign(words.begin(), words.end());
  s.num_topics = g.topics().size();
  s.user_blocks = lay_out({{"name", s.name_vocab.size()},
                           {"gender", s.gender_vocab.size()},
                           {"age", 1},
                           {"hometown", s.hometown_vocab.size()}});
  s.post_blocks = lay_out({{"checkin", s.location_vocab.size()},
                           {"temporal", kHoursPerDay},
                           {"word", s.word_vocab.size()},
                           {"topic", s.num_topics}});
  return s;
}

FeatureMatrix user_features(const HetGraph& g, const FeatureSchema& schema) {
  const auto& name = schema.user_block("name");
  const auto& gender = schema.user_block("gender");
  const auto& age = schema.user_block("age");
  const auto& hometown = schema.user_block("hometown");

  FeatureMatrix fm;
  fm.blocks = schema.user_blocks;
  fm.values = Matrix::Zero(static_cast<Eigen::Index>(g.num_users()), static_cast<Eigen::Index>(schema.user_width()));
  for (std::size_t u = 0; u < g.num_users(); ++u) {
    const auto& a = g.user_attrs(u);
    auto row = fm.values.row(static_cast<Eigen::Index>(u));
    for (const auto& t : a.name) row(name.offset + position(schema.name_vocab, t)) = 1.0;
    if (!a.gender.empty()) row(gender.offset + position(schema.gender_vocab, a.gender)) = 1.0;
    if (a.age) row(age.offset) = static_cast<double>(*a.age);
    if (!a.hometown.empty()) row(hometown.offset + position(schema.hometown_vocab, a.hometown)) = 1.0;
    fm.ids.push_back(g.node(u).id);
  }
  return fm;
}

Matrix tfidf(const Matrix& counts) {
  const double n = static_cast<double>(counts.rows());
  Matrix out = counts;
  for (Eigen::Index j = 0; j < counts.cols(); ++j) {
    const double df = static_cast<double>((counts.col(j).array() > 0.0).count());
    const double idf = std::log((1.0 + n) / (1.0 + df)) + 1.0;
    out.col(j) *= idf;
  }
  return out;
}

FeatureMatrix post_features(const HetGraph& g, const FeatureSchema& schema) {
  const auto& checkin = schema.post_block("checkin");
  const auto& temporal = schema.post_block("temporal");
  const auto& word = schema.post_block("word");
  const auto& topic = schema.post_block("topic");
  const auto rows = static_cast<Eigen::Index>(g.num_posts());

  Matrix checkin_counts = Matrix::Zero(rows, static_cast<Eigen::Index>(checkin.width));
  Matrix word_counts = Matrix::Zero(rows, static_cast<Eigen::Index>(word.width));
  for (std::size_t p = 0; p < g.num_posts(); ++p) {
    const auto& a = g.post_attrs(p);
    for (const auto& l : a.checkins) checkin_counts(p, position(schema.location_vocab, l)) += 1.0;
    for (const auto& w : a.words) word_counts(p, position(schema.word_vocab, w)) += 1.0;
  }

  FeatureMatrix fm;
  fm.blocks = schema.post_blocks;
  fm.values = Matrix::Zero(rows, static_cast<Eigen::Index>(schema.post_width()));
  fm.values.middleCols(checkin.offset, checkin.width) = tfidf(checkin_counts);
  fm.values.middleCols(word.offset, word.width) = tfidf(word_counts);
  for (std::size_t p = 0; p < g.num_posts(); ++p) {
    const auto& a = g.post_attrs(p);
    if (a.hour) fm.values(p, temporal.offset + *a.hour) = 1.0;
    for (std::size_t t = 0; t < a.topics.size(); ++t) fm.values(p, topic.offset + t) = a.topics[t];
    fm.ids.push_back(g.node(g.num_users() + p).id);
  }
  return fm;
}

FeatureMatrix combined_features(const HetGraph& g, const FeatureSchema& schema) {
  const FeatureMatrix users = user_features(g, schema);
  const FeatureMatrix posts = post_features(g, schema);
  const auto uw = static_cast<Eigen::Index>(schema.user_width());
  const auto nu = static_cast<Eigen::Index>(g.num_users());

  FeatureMatrix fm;
  fm.blocks = schema.user_blocks;
  for (FeatureBlock b : schema.post_blocks) {
    b.offset += schema.user_width();
    fm.blocks.push_back(std::move(b));
  }
  fm.values = Matrix::Zero(static_cast<Eigen::Index>(g.num_nodes()), static_cast<Eigen::Index>(schema.combined_width()));
  fm.values.topLeftCorner(nu, uw) = users.values;
  fm.values.bottomRightCorner(posts.values.rows(), posts.values.cols()) = posts.values;
  fm.ids = users.ids;
  fm.ids.insert(fm.ids.end(), posts.ids.begin(), posts.ids.end());
  return fm;
}

ColumnScaler ColumnScaler::fit(const Matrix& x) {
  ColumnScaler s;
  if (x.rows() == 0) {
    s.lo = Vector::Zero(x.cols());
    s.hi = Vector::Zero(x.cols());
    return s;
  }
  s.lo = x.colwise().minCoeff().transpose();
  s.hi = x.colwise().maxCoeff().transpose();
  return s;
}

Matrix ColumnScaler::apply(const Matrix& x) const {
  if (x.cols() != lo.size()) throw ShapeError("scaler fitted on a different column count");
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double range = hi(j) - lo(j);
    if (range > 0.0) {
      out.col(j) = ((x.col(j).array() - lo(j)) / range).cwiseMax(0.0).cwiseMin(1.0).matrix();
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

}  // namespace latte
