#ifndef STPOISSON_DATASET_HPP
#define STPOISSON_DATASET_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stpoisson/effbs.hpp"

namespace stpoisson {

/// Labeled count panel. Files are CSV with the header row carrying the
/// region labels (first header cell is ignored) and the first column carrying
/// time labels. Count cells may be "NA" (or empty) for missing; population
/// cells must be complete and positive.
struct Dataset {
  Eigen::MatrixXd counts;
  Eigen::MatrixXd populations;
  MissingMask missing;
  std::vector<std::string> region_labels;
  std::vector<std::string> time_labels;

  int horizon() const { return static_cast<int>(counts.rows()); }
  int n_regions() const { return static_cast<int>(counts.cols()); }
  Observation observation() const;
};

Dataset load_dataset(const std::string& counts_path, const std::string& populations_path);

/// Writes one panel in the ingestion format. NaN cells are emitted as "NA".
void write_panel_csv(const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& meta,
                     const std::vector<std::string>& time_labels,
                     const std::vector<std::string>& region_labels, const Eigen::MatrixXd& values);

std::vector<std::string> default_region_labels(int n_regions);
std::vector<std::string> default_time_labels(int horizon);

}  // namespace stpoisson

#endif
