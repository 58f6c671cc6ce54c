#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lynceus/config_space.hpp"

namespace lynceus {

struct ProgressPoint {
  double time = 0.0;      // seconds since start
  double progress = 0.0;  // fraction in [0, 1]

  bool operator==(const ProgressPoint&) const = default;
};

/// Ground truth for one configuration. Prices are held per hour, as written
/// in dataset files; billing is per second.
struct JobRecord {
  double runtime = 0.0;         // seconds
  double price_per_hour = 0.0;  // currency per hour
  bool finished = true;         // false: hit the collection cutoff, runtime is the cutoff
  std::vector<ProgressPoint> progress;

  double unit_price() const noexcept { return price_per_hour / 3600.0; }
  double cost() const noexcept { return runtime * unit_price(); }

  bool operator==(const JobRecord&) const = default;
};

class DatasetError : public std::runtime_error {
 public:
  explicit DatasetError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct QueryResult {
  double runtime;
  double unit_price;
  double cost;
  bool finished;
};

struct PartialResult {
  double spent_cost;
  std::optional<double> progress;
};

class Dataset {
 public:
  Dataset(std::string name, ConfigSpace space, std::vector<JobRecord> records)
      : name_(std::move(name)), space_(std::move(space)), records_(std::move(records)) {
    if (records_.size() != space_.cardinality())
      throw DatasetError("dataset '" + name_ + "' has " + std::to_string(records_.size()) +
                         " records for a space of " + std::to_string(space_.cardinality()));
    for (std::size_t i = 0; i < records_.size(); ++i) check_record(records_[i], i);
  }

  const std::string& name() const noexcept { return name_; }
  const ConfigSpace& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return records_.size(); }
  const JobRecord& record(std::size_t index) const { return records_.at(index); }
  std::span<const JobRecord> records() const noexcept { return records_; }

  bool has_progress() const noexcept {
    return std::all_of(records_.begin(), records_.end(),
                       [](const JobRecord& r) { return !r.progress.empty(); });
  }

  QueryResult query(std::size_t index) const {
    const auto& r = records_.at(index);
    return {r.runtime, r.unit_price(), r.cost(), r.finished};
  }

  /// Spend and progress of a run cancelled after t seconds.
  PartialResult query_partial(std::size_t index, double t) const {
    const auto& r = records_.at(index);
    PartialResult out{std::min(t, r.runtime) * r.unit_price(), std::nullopt};
    if (t >= r.runtime) out.spent_cost = r.cost();
    if (!r.progress.empty()) out.progress = interpolate_progress(r.progress, t);
    return out;
  }

  bool feasible(std::size_t index, double t_max) const {
    const auto& r = records_.at(index);
    return r.finished && r.runtime <= t_max;
  }

  /// Cheapest configuration meeting the runtime limit; lowest index on ties.
  std::optional<std::size_t> optimum(double t_max) const {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      if (!feasible(i, t_max)) continue;
      if (!best || records_[i].cost() < records_[*best].cost()) best = i;
    }
    return best;
  }

  bool operator==(const Dataset& o) const {
    return name_ == o.name_ && space_ == o.space_ && records_ == o.records_;
  }

  static double interpolate_progress(std::span<const ProgressPoint> curve, double t) {
    if (t <= 0.0) return 0.0;
    double prev_t = 0.0, prev_p = 0.0;
    for (const auto& pt : curve) {
      if (t <= pt.time) {
        if (t == pt.time) return pt.progress;
        return prev_p + (pt.progress - prev_p) * (t - prev_t) / (pt.time - prev_t);
      }
      prev_t = pt.time;
      prev_p = pt.progress;
    }
    return curve.back().progress;
  }

 private:
  void check_record(const JobRecord& r, std::size_t index) const {
    auto where = [&] { return "configuration " + std::to_string(index); };
    if (!(r.runtime > 0.0) || !std::isfinite(r.runtime))
      throw DatasetError(where() + ": runtime must be positive");
    if (!(r.price_per_hour > 0.0) || !std::isfinite(r.price_per_hour))
      throw DatasetError(where() + ": price must be positive");
    for (std::size_t i = 0; i < r.progress.size(); ++i) {
      const auto& p = r.progress[i];
      if (p.progress < 0.0 || p.progress > 1.0)
        throw DatasetError(where() + ": progress fraction outside [0, 1]");
      if (i > 0 && !(p.time > r.progress[i - 1].time))
        throw DatasetError(where() + ": progress times must be strictly increasing");
      if (i > 0 && p.progress < r.progress[i - 1].progress)
        throw DatasetError(where() + ": progress must be non-decreasing");
    }
    if (!r.progress.empty() && r.progress.back().time != r.runtime)
      throw DatasetError(where() + ": last progress point must be at the runtime");
  }

  std::string name_;
  ConfigSpace space_;
  std::vector<JobRecord> records_;
};

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string trim(std::string s) {
  auto notspace = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  return s;
}

inline double parse_field(const std::string& text, const char* column, std::size_t line) {
  double v = 0.0;
  if (!Dimension::parse_number(text, v))
    throw DatasetError(std::string("column '") + column + "': cannot parse '" + text + "'", line);
  return v;
}

inline std::vector<ProgressPoint> parse_progress(const std::string& text, std::size_t line) {
  std::vector<ProgressPoint> out;
  if (text.empty()) return out;
  for (const auto& item : split(text, ';')) {
    auto parts = split(item, ':');
    if (parts.size() != 2) throw DatasetError("malformed progress entry '" + item + "'", line);
    out.push_back({parse_field(parts[0], "progress", line), parse_field(parts[1], "progress", line)});
  }
  return out;
}

}  // namespace detail

/// Optional metadata that pins dimension order and level order.
struct DatasetMetadata {
  struct Dim {
    std::string name;
    DimensionKind kind;
    std::vector<std::string> levels;
  };
  std::optional<std::string> name;
  std::vector<Dim> dimensions;
};

inline DatasetMetadata parse_metadata(const nlohmann::json& j) {
  DatasetMetadata meta;
  if (j.contains("name")) meta.name = j.at("name").get<std::string>();
  for (const auto& d : j.at("dimensions")) {
    DatasetMetadata::Dim dim;
    dim.name = d.at("name").get<std::string>();
    const auto kind = d.value("kind", std::string("categorical"));
    if (kind == "numeric")
      dim.kind = DimensionKind::numeric;
    else if (kind == "categorical")
      dim.kind = DimensionKind::categorical;
    else
      throw DatasetError("metadata: unknown dimension kind '" + kind + "'");
    for (const auto& l : d.at("levels")) dim.levels.push_back(l.is_string() ? l.get<std::string>() : l.dump());
    meta.dimensions.push_back(std::move(dim));
  }
  return meta;
}

inline std::filesystem::path metadata_path_for(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".meta.json");
  return p;
}

/// Parses the dataset CSV format:
///   p:<dim>..., runtime_s, price_per_h[, finished][, progress]
inline Dataset read_dataset(std::istream& in, const std::string& name,
                            const std::optional<DatasetMetadata>& meta = std::nullopt) {
  std::string header_line;
  if (!std::getline(in, header_line)) throw DatasetError("empty dataset file", 1);
  if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();
  if (header_line.starts_with("\xEF\xBB\xBF")) header_line.erase(0, 3);
  const auto header = detail::split(header_line, ',');

  std::vector<std::string> dim_names;
  std::optional<std::size_t> col_runtime, col_price, col_finished, col_progress;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto h = detail::trim(header[c]);
    if (h.starts_with("p:")) {
      if (col_runtime) throw DatasetError("parameter column '" + h + "' after metric columns", 1);
      if (h.size() == 2) throw DatasetError("parameter column with empty name", 1);
      dim_names.push_back(h.substr(2));
    } else if (h == "runtime_s") {
      col_runtime = c;
    } else if (h == "price_per_h") {
      col_price = c;
    } else if (h == "finished") {
      col_finished = c;
    } else if (h == "progress") {
      col_progress = c;
    } else {
      throw DatasetError("unknown column '" + h + "' (parameter columns are named p:<name>)", 1);
    }
  }
  if (dim_names.empty()) throw DatasetError("header declares no p:<name> parameter columns", 1);
  if (!col_runtime || !col_price) throw DatasetError("header must declare runtime_s and price_per_h", 1);

  struct Row {
    std::size_t line;
    std::vector<std::string> labels;
    JobRecord record;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split(line, ',');
    if (fields.size() != header.size())
      throw DatasetError("expected " + std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()),
                         lineno);
    Row row{lineno, {}, {}};
    for (std::size_t d = 0; d < dim_names.size(); ++d) row.labels.push_back(detail::trim(fields[d]));
    row.record.runtime = detail::parse_field(detail::trim(fields[*col_runtime]), "runtime_s", lineno);
    row.record.price_per_hour = detail::parse_field(detail::trim(fields[*col_price]), "price_per_h", lineno);
    if (!(row.record.runtime > 0.0)) throw DatasetError("runtime_s must be positive", lineno);
    if (!(row.record.price_per_hour > 0.0)) throw DatasetError("price_per_h must be positive", lineno);
    if (col_finished) {
      const auto f = detail::trim(fields[*col_finished]);
      if (f == "1" || f.empty())
        row.record.finished = true;
      else if (f == "0")
        row.record.finished = false;
      else
        throw DatasetError("finished must be 0 or 1, got '" + f + "'", lineno);
    }
    if (col_progress) row.record.progress = detail::parse_progress(detail::trim(fields[*col_progress]), lineno);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DatasetError("dataset has no rows");
  const std::size_t rows_read = rows.size();

  std::vector<Dimension> dims;
  if (meta && !meta->dimensions.empty()) {
    // Metadata may reorder dimensions; map them back onto CSV columns.
    if (meta->dimensions.size() != dim_names.size())
      throw DatasetError("metadata declares " + std::to_string(meta->dimensions.size()) +
                         " dimensions, CSV has " + std::to_string(dim_names.size()));
    std::vector<std::size_t> column_of;
    for (const auto& md : meta->dimensions) {
      auto it = std::find(dim_names.begin(), dim_names.end(), md.name);
      if (it == dim_names.end()) throw DatasetError("metadata dimension '" + md.name + "' not in CSV");
      column_of.push_back(static_cast<std::size_t>(it - dim_names.begin()));
      if (md.kind == DimensionKind::numeric) {
        std::vector<double> values;
        for (const auto& l : md.levels) values.push_back(detail::parse_field(l, md.name.c_str(), 0));
        dims.push_back(Dimension::numeric(md.name, values, md.levels));
      } else {
        dims.push_back(Dimension::categorical(md.name, md.levels));
      }
    }
    for (auto& row : rows) {
      std::vector<std::string> reordered;
      for (auto c : column_of) reordered.push_back(row.labels[c]);
      row.labels = std::move(reordered);
    }
  } else {
    for (std::size_t d = 0; d < dim_names.size(); ++d) {
      std::vector<std::string> distinct;
      for (const auto& row : rows)
        if (std::find(distinct.begin(), distinct.end(), row.labels[d]) == distinct.end())
          distinct.push_back(row.labels[d]);
      bool numeric = true;
      std::vector<std::pair<double, std::string>> parsed;
      for (const auto& l : distinct) {
        double v = 0.0;
        if (!Dimension::parse_number(l, v)) {
          numeric = false;
          break;
        }
        parsed.emplace_back(v, l);
      }
      if (numeric) {
        std::sort(parsed.begin(), parsed.end());
        for (std::size_t i = 1; i < parsed.size(); ++i)
          if (parsed[i].first == parsed[i - 1].first)
            throw DatasetError("dimension '" + dim_names[d] + "': labels '" + parsed[i - 1].second +
                               "' and '" + parsed[i].second + "' denote the same value");
        std::vector<double> values;
        std::vector<std::string> labels;
        for (auto& [v, l] : parsed) {
          values.push_back(v);
          labels.push_back(l);
        }
        dims.push_back(Dimension::numeric(dim_names[d], std::move(values), std::move(labels)));
      } else {
        dims.push_back(Dimension::categorical(dim_names[d], std::move(distinct)));
      }
    }
  }

  ConfigSpace space(std::move(dims));
  std::vector<std::optional<JobRecord>> slots(space.cardinality());
  std::vector<std::size_t> first_line(space.cardinality(), 0);
  for (auto& row : rows) {
    std::vector<std::size_t> levels;
    for (std::size_t d = 0; d < space.dimension_count(); ++d) {
      auto lvl = space.dimension(d).find(row.labels[d]);
      if (!lvl)
        throw DatasetError("dimension '" + space.dimension(d).name() + "': unknown level '" +
                               row.labels[d] + "'",
                           row.line);
      levels.push_back(*lvl);
    }
    const auto idx = space.encode(levels).index;
    if (slots[idx])
      throw DatasetError("duplicate configuration index " + std::to_string(idx) + " " +
                             space.describe(idx) + " (first seen on line " +
                             std::to_string(first_line[idx]) + ")",
                         row.line);
    slots[idx] = std::move(row.record);
    first_line[idx] = row.line;
  }
  std::vector<JobRecord> records;
  records.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i])
      throw DatasetError("missing configuration index " + std::to_string(i) + " " + space.describe(i) +
                             " (input ends here; " + std::to_string(rows_read) + " data rows for " +
                             std::to_string(space.cardinality()) + " configurations)",
                         lineno);
    records.push_back(std::move(*slots[i]));
  }
  return Dataset(meta && meta->name ? *meta->name : name, std::move(space), std::move(records));
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset '" + path.string() + "'");
  std::optional<DatasetMetadata> meta;
  const auto meta_path = metadata_path_for(path);
  if (std::filesystem::exists(meta_path)) {
    std::ifstream mi(meta_path);
    try {
      meta = parse_metadata(nlohmann::json::parse(mi));
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError("metadata '" + meta_path.string() + "': " + e.what());
    }
  }
  return read_dataset(in, path.stem().string(), meta);
}

/// Writes rows in configuration-index order. Numbers use the shortest
/// representation that parses back to the same double.
inline void write_dataset(std::ostream& out, const Dataset& d) {
  const auto& space = d.space();
  const bool with_progress = d.has_progress();
  for (const auto& dim : space.dimensions()) out << "p:" << dim.name() << ',';
  out << "runtime_s,price_per_h,finished";
  if (with_progress) out << ",progress";
  out << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto cfg = space.decode(i);
    for (std::size_t k = 0; k < space.dimension_count(); ++k)
      out << space.dimension(k).label(cfg.levels[k]) << ',';
    const auto& r = d.record(i);
    out << Dimension::format_number(r.runtime) << ',' << Dimension::format_number(r.price_per_hour) << ','
        << (r.finished ? 1 : 0);
    if (with_progress) {
      out << ',';
      for (std::size_t p = 0; p < r.progress.size(); ++p) {
        if (p) out << ';';
        out << Dimension::format_number(r.progress[p].time) << ':'
            << Dimension::format_number(r.progress[p].progress);
      }
    }
    out << '\n';
  }
}

}  // namespace lynceus
