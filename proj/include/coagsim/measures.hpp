#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "coagsim/composition.hpp"

namespace coagsim {

/// One Dirac atom w * delta_x.
struct Particle {
  Composition x;
  double w = 0.0;
};

/// Finite Dirac mixture sum_i w_i delta_{x_i} at a time t.
class MeasureState {
 public:
  explicit MeasureState(std::size_t dim = 1, double time = 0.0);
  /// Validates every particle (w > 0, x in R^d_*).
  MeasureState(std::size_t dim, std::vector<Particle> particles, double time);

  /// Appends an atom; throws DomainError / ParameterError on invalid input.
  void add(const Composition& x, double w);

  std::size_t dim() const noexcept { return dim_; }
  double time() const noexcept { return time_; }
  void set_time(double t) noexcept { time_ = t; }
  std::span<const Particle> particles() const noexcept { return particles_; }
  std::size_t size() const noexcept { return particles_.size(); }
  bool empty() const noexcept { return particles_.empty(); }
  double total_weight() const noexcept;

  /// Set by compaction: identifies the grid the atoms were binned on.
  std::optional<std::uint64_t> grid_tag() const noexcept { return grid_tag_; }
  void set_grid_tag(std::optional<std::uint64_t> tag) noexcept { grid_tag_ = tag; }

  /// Builds a state from atoms that are already known to be valid.
  static MeasureState from_trusted(std::size_t dim, std::vector<Particle> particles, double time);

 private:
  std::size_t dim_;
  double time_;
  std::vector<Particle> particles_;
  std::optional<std::uint64_t> grid_tag_;
};

/// sum_i w_i |x_i|^alpha.
double moment(const MeasureState& state, double alpha);
/// sum_i w_i x_i, componentwise.
Composition mass_vector(const MeasureState& state);
/// Keeps exactly the atoms with eps <= |x| <= 2/eps.
MeasureState restrict_band(const MeasureState& state, double eps);

inline constexpr double kDefaultGridRatio = 1.189207115002721;  // 2^(1/4)

/// Support-compaction grid: the tensor product of per-axis nodes
/// {0 = a_0 < a_1 < a_2 < ...} with a_1 = r_min / d, growing geometrically by
/// the ratio q until a_n >= r_max. The origin is never a node. With
/// lattice_radius >= 1 the axis contains every integer up to lattice_radius
/// and only integers above it, so lattice data stays on the lattice.
class BinGrid {
 public:
  BinGrid(std::size_t dim, double r_min, double r_max, double q = kDefaultGridRatio,
          double lattice_radius = 0.0);
  /// Grid covering the regularization band [eps, 2/eps].
  static BinGrid for_band(std::size_t dim, double eps, double q = kDefaultGridRatio,
                          double lattice_radius = 0.0);

  /// Index of the node at exactly x, if any.
  std::optional<std::size_t> node_of(const Composition& x) const noexcept;
  Composition node_position(std::size_t index) const;
  std::size_t node_count() const noexcept { return node_count_; }
  std::span<const double> axis() const noexcept { return axis_; }
  std::uint64_t tag() const noexcept { return tag_; }

  std::size_t dim() const noexcept { return dim_; }
  double r_min() const noexcept { return r_min_; }
  double r_max() const noexcept { return r_max_; }
  double ratio() const noexcept { return q_; }
  double lattice_radius() const noexcept { return lattice_radius_; }

 private:
  std::size_t dim_;
  double r_min_;
  double r_max_;
  double q_;
  double lattice_radius_;
  std::vector<double> axis_;
  std::size_t node_count_ = 0;
  std::uint64_t tag_ = 0;
};

/// Reusable accumulator that projects atoms onto grid nodes by multilinear
/// splitting over the enclosing grid box. Total weight and the mass vector are
/// preserved; an atom exactly at a node stays there. Output atoms are ordered
/// by node index.
class Compactor {
 public:
  explicit Compactor(const BinGrid& grid);

  /// Throws CompactionError if x is outside the grid box or so close to the
  /// origin that part of its weight would land there.
  void add(const Composition& x, double w);
  void add(std::span<const Particle> particles);
  /// Emits the projected state and resets the accumulator.
  MeasureState take(double time);

  const BinGrid& grid() const noexcept { return grid_; }

 private:
  void deposit(std::size_t node, double w);

  BinGrid grid_;
  bool dense_;
  std::vector<double> weight_;
  std::vector<std::size_t> touched_;
  std::unordered_map<std::size_t, double> sparse_;
};

MeasureState compact(const MeasureState& state, const BinGrid& grid);

/// sum over nodes of |w_a - w_b|; both states must carry this grid's tag.
double tv_distance(const MeasureState& a, const MeasureState& b, const BinGrid& grid);

/// Multi-index alpha in N_0^d \ {0}.
struct LatticePoint {
  std::array<std::int64_t, kMaxDim> a{};
  std::size_t dim = 1;

  LatticePoint() = default;
  LatticePoint(std::initializer_list<std::int64_t> values);
  std::int64_t norm() const noexcept;
  Composition to_composition() const;
  std::int64_t operator[](std::size_t i) const noexcept { return a[i]; }

  friend auto operator<=>(const LatticePoint&, const LatticePoint&) = default;
  friend bool operator==(const LatticePoint&, const LatticePoint&) = default;
};

/// Sparse concentrations n(alpha) on the lattice, capped at |alpha| <= size_cap.
class DiscreteState {
 public:
  DiscreteState(std::size_t dim, std::int64_t size_cap, double time = 0.0);

  /// Throws on zero / negative / out-of-cap keys and negative values.
  void set(const LatticePoint& alpha, double n);
  double get(const LatticePoint& alpha) const;

  std::size_t dim() const noexcept { return dim_; }
  std::int64_t size_cap() const noexcept { return size_cap_; }
  double time() const noexcept { return time_; }
  void set_time(double t) noexcept { time_ = t; }
  const std::map<LatticePoint, double>& entries() const noexcept { return entries_; }

 private:
  std::size_t dim_;
  std::int64_t size_cap_;
  double time_;
  std::map<LatticePoint, double> entries_;
};

double moment(const DiscreteState& state, double alpha);
Composition mass_vector(const DiscreteState& state);
/// Dirac mixture with an atom of weight n(alpha) at each occupied alpha.
MeasureState to_measure(const DiscreteState& state);

/// "%.17g": exact decimal round trip of a double.
std::string format_double(double v);

/// CSV with preamble "# t=<time> d=<dim>" and header x1,...,xd,w.
void write_state_csv(std::ostream& os, const MeasureState& state);
MeasureState read_state_csv(std::istream& is);
/// CSV with preamble "# t=<time> d=<dim>" and header alpha_1,...,alpha_d,n.
void write_lattice_csv(std::ostream& os, const DiscreteState& state);
/// Reads a lattice CSV back as a Dirac mixture on integer points.
MeasureState read_lattice_csv(std::istream& is);

}  // namespace coagsim
