#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ntkforge {

enum class TaskKind { Regression, OneHot, SignedScalar };

enum class NormalizeMode { PerSample, Average, Off };

std::string to_string(NormalizeMode m);
NormalizeMode normalize_mode_from_string(const std::string& s);

// Rows are samples. For OneHot tasks targets hold the {0,1} block; for
// SignedScalar a single +-1 column; for Regression real values.
struct Dataset {
  Eigen::MatrixXd inputs;   // N x d
  Eigen::MatrixXd targets;  // N x o
  TaskKind kind = TaskKind::Regression;

  // Set by normalize() so the dummy-index map stays invertible.
  std::optional<double> dummy_value;  // appended coordinate before scaling
  NormalizeMode applied = NormalizeMode::Off;

  int size() const { return static_cast<int>(inputs.rows()); }
  int dim() const { return static_cast<int>(inputs.cols()); }
};

// Input normalization enforcing |x| = sqrt(d) per sample (PerSample), on
// average across the dataset (Average), or not at all (Off). With
// dummy_index, one coordinate valued at the mean input norm is appended
// before scaling, which makes the map invertible on the originals.
Dataset normalize(const Dataset& data, NormalizeMode mode, bool dummy_index);

// Inverse of the dummy-index normalization on the input block.
Eigen::MatrixXd denormalize_inputs(const Dataset& data);

// CSV ingestion: first row is the header. If target_column is nonempty that
// single column is the target; otherwise the trailing `one_hot_width`
// columns form a one-hot block.
Dataset read_csv(const std::string& path, const std::string& target_column,
                 int one_hot_width = 0, char delimiter = ',');
void write_csv(const std::string& path, const Dataset& data,
               const std::vector<std::string>& feature_names = {}, char delimiter = ',');

// The boolean-cube dataset labeled +1 when the point holds an odd number of
// +1 entries, -1 otherwise; rows enumerate the cube in binary order.
Dataset parity_dataset(int n_bits);

// Split rows into (train, test) by a seeded shuffle.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double train_fraction,
                                          std::uint64_t seed);

// Smooth synthetic regression task: inputs uniform on the sphere of radius
// sqrt(dim), targets a fixed low-order harmonic of the inputs, scaled to
// unit mean square.
Dataset synthetic_regression(int n_samples, int dim, std::uint64_t seed);

}  // namespace ntkforge
