#include "privrec/dataset.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "privrec/rng.hpp"

namespace privrec {

const std::array<std::string_view, kNumOccupations> kOccupations = {
    "administrator", "artist",     "doctor",     "educator",   "engineer",
    "entertainment", "executive",  "healthcare", "homemaker",  "lawyer",
    "librarian",     "marketing",  "none",       "other",      "programmer",
    "retired",       "salesman",   "scientist",  "student",    "technician",
    "writer"};

int occupation_index(std::string_view name) {
  for (int i = 0; i < kNumOccupations; ++i) {
    if (kOccupations[i] == name) return i;
  }
  throw std::invalid_argument("unknown occupation: \"" + std::string(name) + "\"");
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

int64_t parse_int(std::string_view field, int line_no) {
  int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw std::invalid_argument("line " + std::to_string(line_no) +
                                ": not an integer: \"" + std::string(field) + "\"");
  }
  return value;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  int line_no = 0;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!line.empty()) fn(line, line_no);
    start = end + 1;
  }
}

}  // namespace

InteractionData parse_interactions(std::string_view text) {
  InteractionData data;
  for_each_line(text, [&](std::string_view line, int line_no) {
    const auto fields = split(line, '\t');
    if (fields.size() != 4) {
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": expected 4 tab-separated fields, got " +
                                  std::to_string(fields.size()));
    }
    Interaction it;
    const int64_t user = parse_int(fields[0], line_no);
    const int64_t item = parse_int(fields[1], line_no);
    it.rating = static_cast<int>(parse_int(fields[2], line_no));
    it.timestamp = parse_int(fields[3], line_no);
    if (user < 0 || item < 0) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": negative id");
    }
    if (it.rating < 1 || it.rating > 5) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": rating " +
                                  std::to_string(it.rating) + " outside [1,5]");
    }
    it.user = data.users.intern(static_cast<int>(user));
    it.item = data.items.intern(static_cast<int>(item));
    data.interactions.push_back(it);
  });
  return data;
}

std::vector<UserProfile> parse_user_profiles(std::string_view text) {
  std::vector<UserProfile> out;
  for_each_line(text, [&](std::string_view line, int line_no) {
    const auto fields = split(line, '|');
    if (fields.size() != 5) {
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": expected 5 pipe-separated fields, got " +
                                  std::to_string(fields.size()));
    }
    UserProfile p;
    p.user_id = static_cast<int>(parse_int(fields[0], line_no));
    p.age = static_cast<int>(parse_int(fields[1], line_no));
    if (fields[2] == "M") {
      p.gender = 0;
    } else if (fields[2] == "F") {
      p.gender = 1;
    } else {
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": unknown gender token \"" + std::string(fields[2]) + "\"");
    }
    p.occupation = occupation_index(fields[3]);
    out.push_back(p);
  });
  return out;
}

std::vector<UserProfile> align_profiles(const std::vector<UserProfile>& profiles,
                                        const IdRemap& users) {
  std::vector<UserProfile> dense(users.size());
  for (auto& p : dense) p.user_id = -1;
  for (const auto& p : profiles) {
    const auto it = users.to_dense.find(p.user_id);
    if (it != users.to_dense.end()) dense[it->second] = p;
  }
  for (int u = 0; u < users.size(); ++u) {
    if (dense[u].user_id < 0) {
      throw std::invalid_argument("no profile for user id " +
                                  std::to_string(users.to_original[u]));
    }
  }
  return dense;
}

BipartiteGraph build_graph(const std::vector<Interaction>& interactions,
                           int num_users, int num_items) {
  BipartiteGraph g;
  g.num_users = num_users;
  g.num_items = num_items;
  g.user_items.resize(num_users);
  g.item_users.resize(num_items);
  for (const auto& it : interactions) {
    if (it.user < 0 || it.user >= num_users || it.item < 0 || it.item >= num_items) {
      throw std::out_of_range("interaction endpoint out of range");
    }
    g.user_items[it.user].push_back(it.item);
  }
  for (int u = 0; u < num_users; ++u) {
    auto& n = g.user_items[u];
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
    for (const int v : n) g.item_users[v].push_back(u);
    g.num_edges += n.size();
  }
  for (auto& n : g.item_users) std::sort(n.begin(), n.end());
  return g;
}

std::pair<FeatureMatrix, FeatureSchema> engineer_features(
    const BipartiteGraph& graph, const std::vector<Interaction>& interactions,
    const std::vector<UserProfile>& profiles) {
  if (static_cast<int>(profiles.size()) != graph.num_users) {
    throw std::invalid_argument("profiles do not cover all users");
  }

  FeatureSchema schema;
  int offset = 0;
  const auto add = [&](std::string name, FeatureKind kind, int width) {
    schema.features.push_back({std::move(name), kind, width, offset});
    offset += width;
  };
  add("num_rated", FeatureKind::kNumerical, 1);
  for (int r = 1; r <= 5; ++r)
    add("count_r" + std::to_string(r), FeatureKind::kNumerical, 1);
  for (int r = 1; r <= 5; ++r)
    add("ratio_r" + std::to_string(r), FeatureKind::kNumerical, 1);
  add("ratio_positive", FeatureKind::kNumerical, 1);
  add("ratio_negative", FeatureKind::kNumerical, 1);
  add("rating_entropy", FeatureKind::kNumerical, 1);
  add("rating_median", FeatureKind::kNumerical, 1);
  add("rating_min", FeatureKind::kNumerical, 1);
  add("rating_max", FeatureKind::kNumerical, 1);
  add("rating_mean", FeatureKind::kNumerical, 1);
  add("gender", FeatureKind::kCategorical, 2);
  add("occupation", FeatureKind::kCategorical, kNumOccupations);
  add("age_bucket", FeatureKind::kCategorical, kNumAgeBuckets);
  schema.col_min.assign(offset, 0.0);
  schema.col_max.assign(offset, 1.0);

  // Tally ratings per user and level.
  std::vector<std::array<int, 6>> counts(graph.num_users, std::array<int, 6>{});
  for (const auto& it : interactions) counts[it.user][it.rating] += 1;

  FeatureMatrix m(graph.num_users, offset);
  for (int u = 0; u < graph.num_users; ++u) {
    double* row = m.row(u);
    const auto& c = counts[u];
    const int n = c[1] + c[2] + c[3] + c[4] + c[5];
    row[0] = n;
    for (int r = 1; r <= 5; ++r) row[r] = c[r];
    if (n > 0) {
      for (int r = 1; r <= 5; ++r) row[5 + r] = static_cast<double>(c[r]) / n;
      row[11] = static_cast<double>(c[4] + c[5]) / n;
      row[12] = static_cast<double>(c[1] + c[2]) / n;
      double entropy = 0.0;
      for (int r = 1; r <= 5; ++r) {
        if (c[r] > 0) {
          const double p = static_cast<double>(c[r]) / n;
          entropy -= p * std::log(p);
        }
      }
      row[13] = entropy;
      // Lower median of the sorted multiset: the ((n-1)/2)-th rating.
      int target = (n - 1) / 2;
      int median = 0, sum = 0;
      for (int r = 1; r <= 5; ++r) {
        sum += c[r];
        if (sum > target) {
          median = r;
          break;
        }
      }
      row[14] = median;
      int lo = 0, hi = 0;
      for (int r = 1; r <= 5; ++r)
        if (c[r] > 0) {
          lo = r;
          break;
        }
      for (int r = 5; r >= 1; --r)
        if (c[r] > 0) {
          hi = r;
          break;
        }
      row[15] = lo;
      row[16] = hi;
      double total = 0.0;
      for (int r = 1; r <= 5; ++r) total += static_cast<double>(r) * c[r];
      row[17] = total / n;
    }
    const auto& p = profiles[u];
    row[18 + p.gender] = 1.0;
    row[20 + p.occupation] = 1.0;
    row[20 + kNumOccupations + age_bucket(p.age)] = 1.0;
  }
  return {std::move(m), std::move(schema)};
}

void normalize_numericals(FeatureMatrix& matrix, FeatureSchema& schema) {
  schema.col_min.assign(matrix.cols, 0.0);
  schema.col_max.assign(matrix.cols, 1.0);
  for (const auto& f : schema.features) {
    if (f.kind != FeatureKind::kNumerical) continue;
    for (int j = f.offset; j < f.offset + f.width; ++j) {
      double lo = matrix.at(0, j), hi = matrix.at(0, j);
      for (int u = 1; u < matrix.rows; ++u) {
        lo = std::min(lo, matrix.at(u, j));
        hi = std::max(hi, matrix.at(u, j));
      }
      schema.col_min[j] = lo;
      schema.col_max[j] = hi;
      const double range = hi - lo;
      for (int u = 0; u < matrix.rows; ++u) {
        matrix.at(u, j) = range > 0.0 ? 2.0 * (matrix.at(u, j) - lo) / range - 1.0 : 0.0;
      }
    }
  }
}

DataSplit split_per_user(const BipartiteGraph& graph, double ratio, uint64_t seed) {
  DataSplit split;
  split.train.num_users = graph.num_users;
  split.train.num_items = graph.num_items;
  split.train.user_items.resize(graph.num_users);
  split.train.item_users.resize(graph.num_items);
  split.test_items.resize(graph.num_users);
  const Rng base(seed);
  for (int u = 0; u < graph.num_users; ++u) {
    std::vector<int> items = graph.user_items[u];
    Rng rng = base.fork(static_cast<uint64_t>(u));
    rng.shuffle(items);
    const int n = static_cast<int>(items.size());
    // Guard against ratio*n landing just above an integer in floating point.
    const int keep = static_cast<int>(std::ceil(ratio * n - 1e-9));
    auto& train = split.train.user_items[u];
    train.assign(items.begin(), items.begin() + keep);
    std::sort(train.begin(), train.end());
    auto& test = split.test_items[u];
    test.assign(items.begin() + keep, items.end());
    std::sort(test.begin(), test.end());
    split.train.num_edges += train.size();
    for (const int v : train) split.train.item_users[v].push_back(u);
  }
  for (auto& n : split.train.item_users) std::sort(n.begin(), n.end());
  return split;
}

std::string schema_to_json(const FeatureSchema& schema) {
  nlohmann::ordered_json j;
  j["features"] = nlohmann::ordered_json::array();
  for (const auto& f : schema.features) {
    j["features"].push_back({
        {"name", f.name},
        {"kind", f.kind == FeatureKind::kNumerical ? "numerical" : "categorical"},
        {"width", f.width},
        {"offset", f.offset},
    });
  }
  j["d0"] = schema.d0();
  j["d_prime"] = schema.d_prime();
  j["col_min"] = schema.col_min;
  j["col_max"] = schema.col_max;
  return j.dump(2);
}

FeatureSchema schema_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  FeatureSchema schema;
  for (const auto& f : j.at("features")) {
    FeatureDescriptor d;
    d.name = f.at("name").get<std::string>();
    const auto kind = f.at("kind").get<std::string>();
    if (kind == "numerical") {
      d.kind = FeatureKind::kNumerical;
    } else if (kind == "categorical") {
      d.kind = FeatureKind::kCategorical;
    } else {
      throw std::invalid_argument("unknown feature kind: " + kind);
    }
    d.width = f.at("width").get<int>();
    d.offset = f.at("offset").get<int>();
    schema.features.push_back(std::move(d));
  }
  schema.col_min = j.at("col_min").get<std::vector<double>>();
  schema.col_max = j.at("col_max").get<std::vector<double>>();
  if (static_cast<int>(schema.col_min.size()) != schema.d0() ||
      static_cast<int>(schema.col_max.size()) != schema.d0()) {
    throw std::invalid_argument("schema stats do not match d0");
  }
  return schema;
}

void save_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(17);
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) {
      if (c) out << '\t';
      out << m.at(r, c);
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

FeatureMatrix load_feature_matrix(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<std::vector<double>> rows;
  for_each_line(text, [&](std::string_view line, int line_no) {
    std::vector<double> row;
    for (const auto field : split(line, '\t')) {
      try {
        row.push_back(std::stod(std::string(field)));
      } catch (const std::exception&) {
        throw std::invalid_argument("line " + std::to_string(line_no) +
                                    ": bad number \"" + std::string(field) + "\"");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  });
  FeatureMatrix m(static_cast<int>(rows.size()),
                  rows.empty() ? 0 : static_cast<int>(rows.front().size()));
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) m.at(r, c) = rows[r][c];
  return m;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.raw = parse_interactions(read_text_file(dir / "u.data"));
  ds.graph = build_graph(ds.raw.interactions, ds.raw.users.size(), ds.raw.items.size());
  const auto profiles = parse_user_profiles(read_text_file(dir / "u.user"));
  ds.profiles = align_profiles(profiles, ds.raw.users);
  return ds;
}

}  // namespace privrec
