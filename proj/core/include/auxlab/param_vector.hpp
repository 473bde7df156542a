#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace auxlab {

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;

  bool operator==(const Segment&) const = default;
};

// Ordered, contiguous list of named segments. Segments are appended back to
// back, so they are disjoint and cover [0, size()) by construction.
class Layout {
 public:
  Layout() = default;

  Layout& add(std::string name, std::size_t length);

  std::size_t size() const { return size_; }
  const std::vector<Segment>& segments() const { return segments_; }
  const Segment* find(std::string_view name) const;
  const Segment& at(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  bool operator==(const Layout&) const = default;

 private:
  std::vector<Segment> segments_;
  std::size_t size_ = 0;
};

// Flat parameter vector with a named segment layout, e.g. (theta | a | b | W).
class ParamVector {
 public:
  ParamVector() = default;
  // Single segment named "p".
  explicit ParamVector(std::vector<double> values);
  // Throws InvalidArgument if any value is non-finite, DimensionError if the
  // layout does not cover the values exactly.
  ParamVector(std::vector<double> values, Layout layout);

  static ParamVector zeros(const Layout& layout);

  std::size_t size() const { return values_.size(); }
  const Layout& layout() const { return layout_; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> segment(std::string_view name) const;
  std::span<double> segment(std::string_view name);
  bool has_segment(std::string_view name) const { return layout_.contains(name); }

  // Same layout, new values (with the same finiteness/size checks).
  ParamVector with_values(std::vector<double> values) const;

  bool operator==(const ParamVector&) const = default;

 private:
  std::vector<double> values_;
  Layout layout_;
};

double norm2(std::span<const double> v);

}  // namespace auxlab
