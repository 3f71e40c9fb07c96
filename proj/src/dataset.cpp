#include "stpoisson/dataset.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "stpoisson/csv.hpp"

namespace stpoisson {

Observation Dataset::observation() const {
  Observation obs;
  obs.counts = counts;
  obs.population = populations;
  if (missing.any()) obs.missing = missing;
  validate_observation(obs);
  return obs;
}

namespace {

struct Panel {
  Eigen::MatrixXd values;
  MissingMask missing;
  std::vector<std::string> region_labels;
  std::vector<std::string> time_labels;
};

Panel read_panel(const std::string& path, bool allow_missing) {
  const CsvTable table = read_csv(path);
  if (table.header.size() < 2) {
    throw ValidationError(path + ": header must carry at least one region label");
  }
  Panel panel;
  panel.region_labels.assign(table.header.begin() + 1, table.header.end());
  const int S = static_cast<int>(panel.region_labels.size());
  const int T = static_cast<int>(table.rows.size());
  if (T == 0) throw ValidationError(path + ": no data rows");

  std::set<std::string> seen(panel.region_labels.begin(), panel.region_labels.end());
  if (static_cast<int>(seen.size()) != S) {
    throw ValidationError(path + ": region labels are not unique");
  }

  panel.values.resize(T, S);
  panel.missing = MissingMask::Constant(T, S, false);
  std::set<std::string> seen_times;
  for (int t = 0; t < T; ++t) {
    const auto& row = table.rows[t];
    if (static_cast<int>(row.size()) != S + 1) {
      std::ostringstream msg;
      msg << path << ": row " << t + 2 << " has " << row.size() << " cells, expected " << S + 1;
      throw ValidationError(msg.str());
    }
    panel.time_labels.push_back(row[0]);
    if (!seen_times.insert(row[0]).second) {
      throw ValidationError(path + ": duplicate time label '" + row[0] + "'");
    }
    for (int s = 0; s < S; ++s) {
      const std::string& cell = row[s + 1];
      if (cell.empty() || cell == "NA") {
        if (!allow_missing) {
          std::ostringstream msg;
          msg << path << ": cell (row " << t + 2 << ", column " << s + 2
              << ") may not be missing";
          throw ValidationError(msg.str());
        }
        panel.missing(t, s) = true;
        panel.values(t, s) = 0.0;
        continue;
      }
      panel.values(t, s) = parse_double(cell, path, t + 2, s + 2);
    }
  }
  return panel;
}

}  // namespace

Dataset load_dataset(const std::string& counts_path, const std::string& populations_path) {
  Panel counts = read_panel(counts_path, /*allow_missing=*/true);
  Panel pops = read_panel(populations_path, /*allow_missing=*/false);

  if (counts.region_labels != pops.region_labels) {
    throw ValidationError("dataset: region labels disagree between " + counts_path + " and " +
                          populations_path);
  }
  if (counts.time_labels != pops.time_labels) {
    throw ValidationError("dataset: time labels disagree between " + counts_path + " and " +
                          populations_path);
  }

  const int T = static_cast<int>(counts.time_labels.size());
  const int S = static_cast<int>(counts.region_labels.size());
  for (int t = 0; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      if (!counts.missing(t, s)) {
        const double y = counts.values(t, s);
        if (!(y >= 0.0) || y != std::floor(y)) {
          std::ostringstream msg;
          msg << counts_path << ": count at (time " << counts.time_labels[t] << ", region "
              << counts.region_labels[s] << ") must be a nonnegative integer, got " << y;
          throw ValidationError(msg.str());
        }
      }
      if (!(pops.values(t, s) > 0.0)) {
        std::ostringstream msg;
        msg << populations_path << ": population at (time " << pops.time_labels[t] << ", region "
            << pops.region_labels[s] << ") must be positive, got " << pops.values(t, s);
        throw ValidationError(msg.str());
      }
    }
  }

  Dataset ds;
  ds.counts = std::move(counts.values);
  ds.populations = std::move(pops.values);
  ds.missing = std::move(counts.missing);
  ds.region_labels = std::move(counts.region_labels);
  ds.time_labels = std::move(counts.time_labels);
  return ds;
}

void write_panel_csv(const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& meta,
                     const std::vector<std::string>& time_labels,
                     const std::vector<std::string>& region_labels,
                     const Eigen::MatrixXd& values) {
  const int T = static_cast<int>(values.rows());
  const int S = static_cast<int>(values.cols());
  if (static_cast<int>(time_labels.size()) != T || static_cast<int>(region_labels.size()) != S) {
    throw ValidationError("write_panel_csv: label counts do not match the matrix");
  }
  std::vector<std::string> header{"time"};
  header.insert(header.end(), region_labels.begin(), region_labels.end());
  std::vector<std::vector<std::string>> rows;
  rows.reserve(T);
  for (int t = 0; t < T; ++t) {
    std::vector<std::string> row{time_labels[t]};
    for (int s = 0; s < S; ++s) {
      const double v = values(t, s);
      row.push_back(std::isnan(v) ? "NA" : format_double(v));
    }
    rows.push_back(std::move(row));
  }
  write_csv(path, meta, header, rows);
}

std::vector<std::string> default_region_labels(int n_regions) {
  std::vector<std::string> labels;
  for (int s = 1; s <= n_regions; ++s) labels.push_back("r" + std::to_string(s));
  return labels;
}

std::vector<std::string> default_time_labels(int horizon) {
  std::vector<std::string> labels;
  for (int t = 1; t <= horizon; ++t) labels.push_back("t" + std::to_string(t));
  return labels;
}

}  // namespace stpoisson
