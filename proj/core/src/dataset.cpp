#include "auxlab/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "auxlab/errors.hpp"
#include "auxlab/format.hpp"

namespace auxlab {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool same_input(std::span<const double> a, std::span<const double> b) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a[k] - b[k]) > Dataset::kDuplicateTolerance) return false;
  }
  return true;
}

}  // namespace

Dataset::Dataset(std::vector<std::vector<double>> inputs, std::vector<std::vector<double>> targets) {
  if (inputs.empty()) throw InvalidArgument("dataset needs at least one sample");
  if (inputs.size() != targets.size()) throw DimensionError("inputs and targets differ in count");
  size_ = inputs.size();
  input_dim_ = inputs.front().size();
  output_dim_ = targets.front().size();
  if (output_dim_ == 0) throw DimensionError("targets must have at least one coordinate");
  inputs_.reserve(size_ * input_dim_);
  targets_.reserve(size_ * output_dim_);
  for (std::size_t i = 0; i < size_; ++i) {
    if (inputs[i].size() != input_dim_ || targets[i].size() != output_dim_) {
      throw DimensionError("sample " + std::to_string(i) + " has inconsistent dimensions");
    }
    for (double v : inputs[i]) {
      if (!std::isfinite(v)) throw InvalidArgument("dataset input is not finite");
      inputs_.push_back(v);
    }
    for (double v : targets[i]) {
      if (!std::isfinite(v)) throw InvalidArgument("dataset target is not finite");
      targets_.push_back(v);
    }
  }
  for (std::size_t i = 0; i < size_; ++i) {
    bool placed = false;
    for (auto& group : groups_) {
      if (same_input(input(group.front()), input(i))) {
        group.push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) groups_.push_back({i});
  }
}

std::vector<std::vector<double>> Dataset::representatives() const {
  std::vector<std::vector<double>> reps;
  reps.reserve(groups_.size());
  for (const auto& group : groups_) {
    const auto x = input(group.front());
    reps.emplace_back(x.begin(), x.end());
  }
  return reps;
}

Dataset Dataset::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("dataset is empty (missing header)");
  const std::vector<std::string> header = split_csv_line(line);
  std::size_t dx = 0;
  std::size_t dy = 0;
  for (const std::string& raw : header) {
    const std::string name = trim(raw);
    if (name.size() >= 2 && name[0] == 'x' && dy == 0 && name == "x" + std::to_string(dx + 1)) {
      ++dx;
    } else if (name.size() >= 2 && name[0] == 'y' && name == "y" + std::to_string(dy + 1)) {
      ++dy;
    } else {
      throw IoError("unexpected dataset column '" + name + "'; header must be x1..xdx,y1..ydy");
    }
  }
  if (dy == 0) throw IoError("dataset header has no target columns");

  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> targets;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != dx + dy) {
      throw IoError("dataset row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                    " cells, expected " + std::to_string(dx + dy));
    }
    std::vector<double> x(dx);
    std::vector<double> y(dy);
    try {
      for (std::size_t k = 0; k < dx; ++k) x[k] = parse_double(cells[k]);
      for (std::size_t k = 0; k < dy; ++k) y[k] = parse_double(cells[dx + k]);
    } catch (const InvalidArgument& e) {
      throw IoError("dataset row " + std::to_string(row) + ": " + e.what());
    }
    inputs.push_back(std::move(x));
    targets.push_back(std::move(y));
  }
  if (inputs.empty()) throw IoError("dataset has no rows");
  try {
    return Dataset(std::move(inputs), std::move(targets));
  } catch (const InvalidArgument& e) {
    throw IoError(e.what());
  }
}

Dataset Dataset::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  return read_csv(in);
}

void Dataset::write_csv(std::ostream& out) const {
  for (std::size_t k = 0; k < input_dim_; ++k) out << 'x' << (k + 1) << ',';
  for (std::size_t k = 0; k < output_dim_; ++k) out << 'y' << (k + 1) << (k + 1 < output_dim_ ? "," : "\n");
  for (std::size_t i = 0; i < size_; ++i) {
    out << join_doubles(input(i));
    if (input_dim_ > 0) out << ',';
    out << join_doubles(target(i)) << '\n';
  }
}

}  // namespace auxlab
