#include "ransom/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "ransom/error.hpp"

namespace ransom {

DesignMatrix::DesignMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                           std::vector<double> labels)
    : rows_(rows), cols_(cols), values_(std::move(values)), labels_(std::move(labels)) {
  if (values_.size() != rows_ * cols_ || labels_.size() != rows_) {
    throw ConfigError("design matrix size mismatch");
  }
  for (double y : labels_) {
    if (y != 1.0 && y != -1.0) throw ConfigError("labels must be +1 or -1");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw ConfigError("feature values must be finite");
  }
}

DesignMatrix DesignMatrix::subset(std::span<const std::size_t> indices) const {
  std::vector<double> values;
  std::vector<double> labels;
  values.reserve(indices.size() * cols_);
  labels.reserve(indices.size());
  for (std::size_t i : indices) {
    auto r = row(i);
    values.insert(values.end(), r.begin(), r.end());
    labels.push_back(labels_[i]);
  }
  return DesignMatrix(indices.size(), cols_, std::move(values), std::move(labels));
}

FeatureScaler FeatureScaler::fit(const DesignMatrix& m) {
  FeatureScaler s;
  s.mean.assign(m.cols(), 0.0);
  s.scale.assign(m.cols(), 1.0);
  if (m.rows() == 0) return s;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) s.mean[j] += r[j];
  }
  for (double& v : s.mean) v /= static_cast<double>(m.rows());
  std::vector<double> var(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) var[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
  }
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(m.rows()));
    s.scale[j] = sd > 0.0 ? 1.0 / sd : 1.0;
  }
  return s;
}

DesignMatrix FeatureScaler::apply(const DesignMatrix& m) const {
  std::vector<double> values = m.values();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      double& v = values[i * m.cols() + j];
      v = (v - mean[j]) * scale[j];
    }
  }
  return DesignMatrix(m.rows(), m.cols(), std::move(values), m.labels());
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

DesignMatrix parse_libsvm(std::istream& in, std::size_t num_features) {
  struct Row {
    double label;
    std::vector<std::pair<std::size_t, double>> features;
  };
  std::vector<Row> rows;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    Row row;
    double raw_label = 0.0;
    if (!parse_double(tokens[0], raw_label)) {
      throw ParseError("non-numeric label '" + std::string(tokens[0]) + "'", line_no);
    }
    if (raw_label == 1.0) {
      row.label = 1.0;
    } else if (raw_label == 0.0 || raw_label == -1.0) {
      row.label = -1.0;
    } else {
      throw ParseError("label must be 0/1 or -1/+1", line_no);
    }
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto colon = tokens[t].find(':');
      if (colon == std::string_view::npos) {
        throw ParseError("expected idx:val, got '" + std::string(tokens[t]) + "'", line_no);
      }
      std::size_t idx = 0;
      double val = 0.0;
      if (!parse_int(tokens[t].substr(0, colon), idx) || idx == 0) {
        throw ParseError("bad feature index in '" + std::string(tokens[t]) + "'", line_no);
      }
      if (!parse_double(tokens[t].substr(colon + 1), val) || !std::isfinite(val)) {
        throw ParseError("non-numeric value in '" + std::string(tokens[t]) + "'", line_no);
      }
      if (num_features > 0 && idx > num_features) {
        throw ParseError("feature index " + std::to_string(idx) + " exceeds " +
                             std::to_string(num_features),
                         line_no);
      }
      for (const auto& f : row.features) {
        if (f.first == idx) throw ParseError("duplicate feature index", line_no);
      }
      max_index = std::max(max_index, idx);
      row.features.emplace_back(idx, val);
    }
    rows.push_back(std::move(row));
  }
  const std::size_t cols = num_features > 0 ? num_features : max_index;
  std::vector<double> values(rows.size() * cols, 0.0);
  std::vector<double> labels;
  labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    labels.push_back(rows[i].label);
    for (const auto& [idx, val] : rows[i].features) values[i * cols + idx - 1] = val;
  }
  return DesignMatrix(rows.size(), cols, std::move(values), std::move(labels));
}

DesignMatrix load_libsvm(const std::string& path, std::size_t num_features) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open LibSVM file '" + path + "'");
  return parse_libsvm(in, num_features);
}

std::string serialize_libsvm(const DesignMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out += m.label(i) > 0 ? "+1" : "-1";
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (r[j] == 0.0) continue;
      out += ' ';
      out += std::to_string(j + 1);
      out += ':';
      out += format_double(r[j]);
    }
    out += '\n';
  }
  return out;
}

RatingsTable parse_movielens(std::istream& in, std::size_t top_users, std::size_t top_items) {
  struct Key {
    std::int64_t user;
    std::int64_t item;
    bool operator<(const Key& o) const { return user != o.user ? user < o.user : item < o.item; }
  };
  std::map<Key, Rating> latest;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 4) throw ParseError("expected 4 fields: user item rating timestamp", line_no);
    Rating r;
    if (!parse_int(tokens[0], r.user_id) || !parse_int(tokens[1], r.item_id) ||
        !parse_double(tokens[2], r.rating) || !parse_int(tokens[3], r.timestamp) ||
        !std::isfinite(r.rating)) {
      throw ParseError("malformed rating line", line_no);
    }
    auto [it, inserted] = latest.try_emplace(Key{r.user_id, r.item_id}, r);
    if (!inserted && r.timestamp >= it->second.timestamp) it->second = r;
  }

  auto select = [](const std::map<std::int64_t, std::size_t>& counts, std::size_t top) {
    std::vector<std::pair<std::int64_t, std::size_t>> v(counts.begin(), counts.end());
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (v.size() > top) v.resize(top);
    std::vector<std::int64_t> ids;
    for (const auto& p : v) ids.push_back(p.first);
    std::sort(ids.begin(), ids.end());
    return ids;
  };

  std::map<std::int64_t, std::size_t> user_counts;
  std::map<std::int64_t, std::size_t> item_counts;
  for (const auto& [key, r] : latest) {
    ++user_counts[key.user];
    ++item_counts[key.item];
  }
  RatingsTable table;
  table.user_ids = select(user_counts, top_users);
  table.item_ids = select(item_counts, top_items);
  std::unordered_map<std::int64_t, std::size_t> user_index;
  std::unordered_map<std::int64_t, std::size_t> item_index;
  for (std::size_t i = 0; i < table.user_ids.size(); ++i) user_index[table.user_ids[i]] = i;
  for (std::size_t i = 0; i < table.item_ids.size(); ++i) item_index[table.item_ids[i]] = i;
  for (const auto& [key, r] : latest) {
    auto u = user_index.find(key.user);
    auto it = item_index.find(key.item);
    if (u == user_index.end() || it == item_index.end()) continue;
    Rating kept = r;
    kept.user = u->second;
    kept.item = it->second;
    table.entries.push_back(kept);
  }
  return table;
}

RatingsTable load_movielens(const std::string& path, std::size_t top_users,
                            std::size_t top_items) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ratings file '" + path + "'");
  return parse_movielens(in, top_users, top_items);
}

LowRankSample synth_lowrank(std::size_t rows, std::size_t cols, std::size_t rank,
                            double noise_sigma, double density, Rng& rng) {
  if (rank == 0 || rank > std::min(rows, cols)) throw ConfigError("rank must be in [1, min(shape)]");
  if (!(density > 0.0 && density <= 1.0)) throw ConfigError("density must be in (0, 1]");
  const double scale = 1.0 / std::sqrt(static_cast<double>(rank));
  std::vector<double> u(rows * rank);
  std::vector<double> v(cols * rank);
  for (double& x : u) x = scale * rng.normal();
  for (double& x : v) x = scale * rng.normal();
  LowRankSample s;
  s.rows = rows;
  s.cols = cols;
  s.clean.assign(rows * cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < rank; ++k) acc += u[i * rank + k] * v[j * rank + k];
      s.clean[i * cols + j] = acc;
    }
  }
  s.values = s.clean;
  if (noise_sigma > 0.0) {
    for (double& x : s.values) x += noise_sigma * rng.normal();
  }
  s.mask.resize(rows * cols);
  for (auto& m : s.mask) m = density >= 1.0 ? 1 : (rng.uniform() < density ? 1 : 0);
  return s;
}

Split train_test_split(std::size_t n, double test_ratio, const RngState& state) {
  if (!(test_ratio >= 0.0 && test_ratio <= 1.0)) throw ConfigError("test ratio must be in [0, 1]");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(state);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(perm[i - 1], perm[j]);
  }
  const auto n_test = static_cast<std::size_t>(std::llround(test_ratio * static_cast<double>(n)));
  Split s;
  s.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

}  // namespace ransom
