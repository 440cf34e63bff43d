#include "ntkforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ntkforge {

std::string to_string(NormalizeMode m) {
  switch (m) {
    case NormalizeMode::PerSample: return "per_sample";
    case NormalizeMode::Average: return "average";
    case NormalizeMode::Off: return "off";
  }
  return "?";
}

NormalizeMode normalize_mode_from_string(const std::string& s) {
  if (s == "per_sample") return NormalizeMode::PerSample;
  if (s == "average") return NormalizeMode::Average;
  if (s == "off") return NormalizeMode::Off;
  throw std::invalid_argument("unknown normalize mode: " + s);
}

Dataset normalize(const Dataset& data, NormalizeMode mode, bool dummy_index) {
  Dataset out = data;
  if (dummy_index) {
    const double mean_norm = data.inputs.rowwise().norm().mean();
    out.inputs.resize(data.inputs.rows(), data.inputs.cols() + 1);
    out.inputs.leftCols(data.inputs.cols()) = data.inputs;
    out.inputs.col(data.inputs.cols()).setConstant(mean_norm);
    out.dummy_value = mean_norm;
  }
  out.applied = mode;
  if (mode == NormalizeMode::Off) return out;

  const double target_norm = std::sqrt(static_cast<double>(out.inputs.cols()));
  if (mode == NormalizeMode::PerSample) {
    for (int i = 0; i < out.inputs.rows(); ++i) {
      const double nrm = out.inputs.row(i).norm();
      if (nrm == 0.0) {
        throw std::invalid_argument("normalize: zero input row " + std::to_string(i) +
                                    " cannot be scaled per sample");
      }
      out.inputs.row(i) *= target_norm / nrm;
    }
  } else {  // Average
    const double mean_norm = out.inputs.rowwise().norm().mean();
    if (mean_norm == 0.0) throw std::invalid_argument("normalize: all-zero inputs");
    out.inputs *= target_norm / mean_norm;
  }
  return out;
}

Eigen::MatrixXd denormalize_inputs(const Dataset& data) {
  if (!data.dummy_value) {
    throw std::invalid_argument("denormalize_inputs: dataset has no dummy index");
  }
  const double m = *data.dummy_value;
  const int d = static_cast<int>(data.inputs.cols()) - 1;
  Eigen::MatrixXd orig(data.inputs.rows(), d);
  for (int i = 0; i < data.inputs.rows(); ++i) {
    const double last = data.inputs(i, d);
    if (last == 0.0) throw std::runtime_error("denormalize_inputs: zero dummy coordinate");
    orig.row(i) = data.inputs.row(i).head(d) * (m / last);
  }
  return orig;
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

}  // namespace

Dataset read_csv(const std::string& path, const std::string& target_column, int one_hot_width,
                 char delimiter) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_line(line, delimiter);
  const int ncol = static_cast<int>(header.size());

  int target_idx = -1;
  if (!target_column.empty()) {
    for (int i = 0; i < ncol; ++i) {
      if (header[i] == target_column) target_idx = i;
    }
    if (target_idx < 0) {
      throw std::runtime_error("read_csv: target column '" + target_column + "' not found");
    }
  } else if (one_hot_width <= 0 || one_hot_width >= ncol) {
    throw std::runtime_error("read_csv: need a target column name or a valid one-hot width");
  }

  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_line(line, delimiter);
    if (static_cast<int>(fields.size()) != ncol) {
      throw std::runtime_error("read_csv: row " + std::to_string(lineno) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(ncol));
    }
    std::vector<double> row(ncol);
    for (int i = 0; i < ncol; ++i) {
      try {
        row[i] = std::stod(fields[i]);
      } catch (const std::exception&) {
        throw std::runtime_error("read_csv: non-numeric field '" + fields[i] + "' at row " +
                                 std::to_string(lineno));
      }
    }
    rows.push_back(std::move(row));
  }

  const int n = static_cast<int>(rows.size());
  Dataset data;
  if (target_idx >= 0) {
    data.inputs.resize(n, ncol - 1);
    data.targets.resize(n, 1);
    for (int i = 0; i < n; ++i) {
      int col = 0;
      for (int j = 0; j < ncol; ++j) {
        if (j == target_idx) {
          data.targets(i, 0) = rows[i][j];
        } else {
          data.inputs(i, col++) = rows[i][j];
        }
      }
    }
    data.kind = TaskKind::Regression;
  } else {
    const int d = ncol - one_hot_width;
    data.inputs.resize(n, d);
    data.targets.resize(n, one_hot_width);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) data.inputs(i, j) = rows[i][j];
      for (int j = 0; j < one_hot_width; ++j) data.targets(i, j) = rows[i][d + j];
    }
    data.kind = TaskKind::OneHot;
  }
  return data;
}

void write_csv(const std::string& path, const Dataset& data,
               const std::vector<std::string>& feature_names, char delimiter) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  const int d = data.dim();
  const int o = static_cast<int>(data.targets.cols());
  for (int j = 0; j < d; ++j) {
    if (j < static_cast<int>(feature_names.size())) {
      out << feature_names[j];
    } else {
      out << "x" << j;
    }
    out << delimiter;
  }
  for (int j = 0; j < o; ++j) {
    out << "y" << j;
    if (j + 1 < o) out << delimiter;
  }
  out << "\n";
  char buf[32];
  for (int i = 0; i < data.size(); ++i) {
    for (int j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.inputs(i, j));
      out << buf << delimiter;
    }
    for (int j = 0; j < o; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.targets(i, j));
      out << buf;
      if (j + 1 < o) out << delimiter;
    }
    out << "\n";
  }
}

Dataset parity_dataset(int n_bits) {
  if (n_bits < 1) throw std::invalid_argument("parity_dataset: n_bits must be >= 1");
  if (n_bits > 20) {
    throw std::invalid_argument("parity_dataset: n_bits > 20 rejected (2^n enumeration)");
  }
  const int n = 1 << n_bits;
  Dataset data;
  data.inputs.resize(n, n_bits);
  data.targets.resize(n, 1);
  data.kind = TaskKind::SignedScalar;
  for (int i = 0; i < n; ++i) {
    int ones = 0;
    for (int b = 0; b < n_bits; ++b) {
      const bool plus = (i >> b) & 1;
      data.inputs(i, b) = plus ? 1.0 : -1.0;
      ones += plus ? 1 : 0;
    }
    data.targets(i, 0) = (ones % 2 == 1) ? 1.0 : -1.0;
  }
  return data;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double train_fraction,
                                          std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split_dataset: train_fraction must be in (0,1)");
  }
  const int n = data.size();
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const int n_train = std::max(1, static_cast<int>(std::lround(n * train_fraction)));

  const auto take = [&](int begin, int count) {
    Dataset part;
    part.kind = data.kind;
    part.applied = data.applied;
    part.dummy_value = data.dummy_value;
    part.inputs.resize(count, data.dim());
    part.targets.resize(count, data.targets.cols());
    for (int i = 0; i < count; ++i) {
      part.inputs.row(i) = data.inputs.row(idx[begin + i]);
      part.targets.row(i) = data.targets.row(idx[begin + i]);
    }
    return part;
  };
  return {take(0, n_train), take(n_train, n - n_train)};
}

Dataset synthetic_regression(int n_samples, int dim, std::uint64_t seed) {
  if (n_samples < 1 || dim < 1) throw std::invalid_argument("synthetic_regression: bad sizes");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::VectorXd w1(dim), w2(dim);
  for (int j = 0; j < dim; ++j) w1[j] = gauss(rng);
  for (int j = 0; j < dim; ++j) w2[j] = gauss(rng);
  w1.normalize();
  w2 -= w2.dot(w1) * w1;
  w2.normalize();

  Dataset data;
  data.kind = TaskKind::Regression;
  data.inputs.resize(n_samples, dim);
  data.targets.resize(n_samples, 1);
  const double radius = std::sqrt(static_cast<double>(dim));
  for (int i = 0; i < n_samples; ++i) {
    Eigen::VectorXd x(dim);
    for (int j = 0; j < dim; ++j) x[j] = gauss(rng);
    x *= radius / x.norm();
    data.inputs.row(i) = x.transpose();
    const double u = w1.dot(x) / radius;   // in [-1, 1]
    const double v = w2.dot(x) / radius;
    data.targets(i, 0) = u + 0.5 * (2.0 * u * u - 1.0) + 0.5 * v;
  }
  // unit mean square so epochs-to-threshold is comparable across seeds
  const double ms = data.targets.array().square().mean();
  data.targets /= std::sqrt(ms);
  return data;
}

}  // namespace ntkforge
