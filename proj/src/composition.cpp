#include "coagsim/composition.hpp"

#include <cmath>
#include <string>

#include "coagsim/errors.hpp"

namespace coagsim {

Composition::Composition(std::size_t dim) : dim_(dim) {
  if (dim == 0 || dim > kMaxDim) {
    throw ParameterError("composition dimension must lie in [1, " + std::to_string(kMaxDim) +
                         "], got " + std::to_string(dim));
  }
}

Composition::Composition(std::initializer_list<double> values) : Composition(values.size()) {
  std::size_t i = 0;
  for (double v : values) v_[i++] = v;
}

Composition Composition::from_span(std::span<const double> values) {
  Composition c(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) c.v_[i] = values[i];
  return c;
}

double Composition::norm() const noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) s += std::abs(v_[i]);
  return s;
}

Composition& Composition::operator+=(const Composition& o) noexcept {
  for (std::size_t i = 0; i < dim_; ++i) v_[i] += o.v_[i];
  return *this;
}

Composition& Composition::operator-=(const Composition& o) noexcept {
  for (std::size_t i = 0; i < dim_; ++i) v_[i] -= o.v_[i];
  return *this;
}

Composition& Composition::operator*=(double s) noexcept {
  for (std::size_t i = 0; i < dim_; ++i) v_[i] *= s;
  return *this;
}

bool operator==(const Composition& a, const Composition& b) noexcept {
  if (a.dim_ != b.dim_) return false;
  for (std::size_t i = 0; i < a.dim_; ++i) {
    if (a.v_[i] != b.v_[i]) return false;
  }
  return true;
}

double l1_distance(const Composition& a, const Composition& b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

void require_positive_composition(const Composition& x, const char* what) {
  if (x.dim() == 0) throw DomainError(std::string(what) + ": empty composition vector");
  for (double v : x.values()) {
    if (!std::isfinite(v) || v < 0.0) {
      throw DomainError(std::string(what) + ": composition entries must be finite and nonnegative");
    }
  }
  if (!(x.norm() > 0.0)) throw DomainError(std::string(what) + ": zero composition vector");
}

}  // namespace coagsim
