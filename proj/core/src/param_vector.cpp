#include "auxlab/param_vector.hpp"

#include <cmath>

#include "auxlab/errors.hpp"

namespace auxlab {

Layout& Layout::add(std::string name, std::size_t length) {
  if (find(name) != nullptr) {
    throw InvalidArgument("duplicate segment name '" + name + "'");
  }
  segments_.push_back(Segment{std::move(name), size_, length});
  size_ += length;
  return *this;
}

const Segment* Layout::find(std::string_view name) const {
  for (const auto& s : segments_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const Segment& Layout::at(std::string_view name) const {
  const Segment* s = find(name);
  if (s == nullptr) throw InvalidArgument("no segment named '" + std::string(name) + "'");
  return *s;
}

ParamVector::ParamVector(std::vector<double> values)
    : ParamVector(values, Layout().add("p", values.size())) {}

ParamVector::ParamVector(std::vector<double> values, Layout layout)
    : values_(std::move(values)), layout_(std::move(layout)) {
  if (layout_.size() != values_.size()) {
    throw DimensionError("layout covers " + std::to_string(layout_.size()) + " entries, vector has " +
                         std::to_string(values_.size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidArgument("parameter vector contains a non-finite value");
  }
}

ParamVector ParamVector::zeros(const Layout& layout) {
  return ParamVector(std::vector<double>(layout.size(), 0.0), layout);
}

std::span<const double> ParamVector::segment(std::string_view name) const {
  const Segment& s = layout_.at(name);
  return std::span<const double>(values_).subspan(s.offset, s.length);
}

std::span<double> ParamVector::segment(std::string_view name) {
  const Segment& s = layout_.at(name);
  return std::span<double>(values_).subspan(s.offset, s.length);
}

ParamVector ParamVector::with_values(std::vector<double> values) const {
  return ParamVector(std::move(values), layout_);
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace auxlab
