#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace auxlab {

// Training samples (x_i, y_i), i = 1..m, with the partition of indices into
// groups of identical inputs (coordinate-wise within 1e-12).
class Dataset {
 public:
  static constexpr double kDuplicateTolerance = 1e-12;

  Dataset(std::vector<std::vector<double>> inputs, std::vector<std::vector<double>> targets);

  std::size_t size() const { return size_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }

  std::span<const double> input(std::size_t i) const {
    return std::span<const double>(inputs_).subspan(i * input_dim_, input_dim_);
  }
  std::span<const double> target(std::size_t i) const {
    return std::span<const double>(targets_).subspan(i * output_dim_, output_dim_);
  }

  // Groups ordered by first occurrence; indices ascending within a group.
  const std::vector<std::vector<std::size_t>>& groups() const { return groups_; }
  std::size_t distinct_inputs() const { return groups_.size(); }
  // One input per group (its first member).
  std::vector<std::vector<double>> representatives() const;

  // Header `x1..xdx,y1..ydy`, one row per sample.
  static Dataset read_csv(std::istream& in);
  static Dataset load_csv(const std::string& path);
  void write_csv(std::ostream& out) const;

  bool operator==(const Dataset&) const = default;

 private:
  std::size_t size_ = 0;
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
  std::vector<double> inputs_;
  std::vector<double> targets_;
  std::vector<std::vector<std::size_t>> groups_;
};

}  // namespace auxlab
