#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>

namespace coagsim {

/// Largest supported number of components.
inline constexpr std::size_t kMaxDim = 4;

/// Fixed-capacity composition vector x in [0, inf)^d. Sizes are measured in
/// the l1 norm throughout.
class Composition {
 public:
  Composition() = default;
  explicit Composition(std::size_t dim);
  Composition(std::initializer_list<double> values);
  static Composition from_span(std::span<const double> values);

  std::size_t dim() const noexcept { return dim_; }
  double operator[](std::size_t i) const noexcept { return v_[i]; }
  double& operator[](std::size_t i) noexcept { return v_[i]; }
  std::span<const double> values() const noexcept { return {v_.data(), dim_}; }

  /// l1 norm |x|.
  double norm() const noexcept;

  Composition& operator+=(const Composition& o) noexcept;
  Composition& operator-=(const Composition& o) noexcept;
  Composition& operator*=(double s) noexcept;

  friend Composition operator+(Composition a, const Composition& b) noexcept { return a += b; }
  friend Composition operator-(Composition a, const Composition& b) noexcept { return a -= b; }
  friend Composition operator*(Composition a, double s) noexcept { return a *= s; }
  friend Composition operator*(double s, Composition a) noexcept { return a *= s; }
  friend bool operator==(const Composition& a, const Composition& b) noexcept;

 private:
  std::array<double, kMaxDim> v_{};
  std::size_t dim_ = 0;
};

/// l1 distance between two vectors of equal dimension.
double l1_distance(const Composition& a, const Composition& b) noexcept;

/// Throws DomainError unless every entry is finite, nonnegative and |x| > 0.
void require_positive_composition(const Composition& x, const char* what);

}  // namespace coagsim
