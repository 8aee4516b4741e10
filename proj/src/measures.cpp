#include "coagsim/measures.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include "coagsim/errors.hpp"
#include "coagsim/rng.hpp"

namespace coagsim {

namespace {

void require_weight(double w) {
  if (!(w > 0.0) || !std::isfinite(w)) throw ParameterError("particle weight must be finite and > 0");
}

std::string describe(const Composition& x) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < x.dim(); ++i) os << (i ? "," : "") << format_double(x[i]);
  os << ")";
  return os.str();
}

}  // namespace

MeasureState::MeasureState(std::size_t dim, double time) : dim_(dim), time_(time) {
  Composition probe(dim);
  (void)probe;
}

MeasureState::MeasureState(std::size_t dim, std::vector<Particle> particles, double time)
    : MeasureState(dim, time) {
  particles_.reserve(particles.size());
  for (const auto& p : particles) add(p.x, p.w);
}

MeasureState MeasureState::from_trusted(std::size_t dim, std::vector<Particle> particles, double time) {
  MeasureState s(dim, time);
  s.particles_ = std::move(particles);
  return s;
}

void MeasureState::add(const Composition& x, double w) {
  if (x.dim() != dim_) throw DomainError("particle dimension does not match state dimension");
  require_positive_composition(x, "MeasureState::add");
  require_weight(w);
  particles_.push_back({x, w});
  grid_tag_.reset();
}

double MeasureState::total_weight() const noexcept {
  double s = 0.0;
  for (const auto& p : particles_) s += p.w;
  return s;
}

double moment(const MeasureState& state, double alpha) {
  double s = 0.0;
  if (alpha == 0.0) {
    for (const auto& p : state.particles()) s += p.w;
  } else if (alpha == 1.0) {
    for (const auto& p : state.particles()) s += p.w * p.x.norm();
  } else {
    for (const auto& p : state.particles()) s += p.w * std::pow(p.x.norm(), alpha);
  }
  return s;
}

Composition mass_vector(const MeasureState& state) {
  Composition m(state.dim());
  for (const auto& p : state.particles()) {
    for (std::size_t i = 0; i < state.dim(); ++i) m[i] += p.w * p.x[i];
  }
  return m;
}

MeasureState restrict_band(const MeasureState& state, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("restrict: eps must lie in (0,1)");
  std::vector<Particle> kept;
  kept.reserve(state.size());
  const double hi = 2.0 / eps;
  for (const auto& p : state.particles()) {
    const double r = p.x.norm();
    if (r >= eps && r <= hi) kept.push_back(p);
  }
  return MeasureState::from_trusted(state.dim(), std::move(kept), state.time());
}

BinGrid::BinGrid(std::size_t dim, double r_min, double r_max, double q, double lattice_radius)
    : dim_(dim), r_min_(r_min), r_max_(r_max), q_(q), lattice_radius_(lattice_radius) {
  Composition probe(dim);
  (void)probe;
  if (!(r_min > 0.0) || !(r_max > r_min)) throw ParameterError("grid: need 0 < r_min < r_max");
  if (!(q > 1.0)) throw ParameterError("grid: ratio q must exceed 1");
  if (!(lattice_radius >= 0.0)) throw ParameterError("grid: lattice_radius must be >= 0");

  axis_.push_back(0.0);
  double v = r_min / static_cast<double>(dim);
  if (lattice_radius >= 1.0) {
    for (; v < 1.0 - 1e-9; v *= q) axis_.push_back(v);
    const double top = std::floor(lattice_radius);
    for (double k = 1.0; k <= top; k += 1.0) axis_.push_back(k);
    v = top;
    while (v < r_max) {
      v = std::max(v + 1.0, std::round(v * q));
      axis_.push_back(v);
    }
  } else {
    axis_.push_back(v);
    while (v < r_max) {
      v *= q;
      axis_.push_back(v);
    }
  }

  double count = 1.0;
  for (std::size_t i = 0; i < dim; ++i) count *= static_cast<double>(axis_.size());
  if (count > static_cast<double>(std::size_t{1} << 40)) {
    throw ResourceError("grid: too many nodes (" + format_double(count) + "); coarsen q or lattice radius");
  }
  node_count_ = static_cast<std::size_t>(count);

  std::uint64_t h = splitmix64(dim);
  for (double u : {r_min, r_max, q, lattice_radius}) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(u));
  tag_ = h;
}

BinGrid BinGrid::for_band(std::size_t dim, double eps, double q, double lattice_radius) {
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("grid: eps must lie in (0,1)");
  return BinGrid(dim, eps, 2.0 / eps, q, lattice_radius);
}

std::optional<std::size_t> BinGrid::node_of(const Composition& x) const noexcept {
  if (x.dim() != dim_) return std::nullopt;
  std::size_t idx = 0;
  std::size_t stride = 1;
  for (std::size_t i = 0; i < dim_; ++i) {
    auto it = std::lower_bound(axis_.begin(), axis_.end(), x[i]);
    if (it == axis_.end() || *it != x[i]) return std::nullopt;
    idx += static_cast<std::size_t>(it - axis_.begin()) * stride;
    stride *= axis_.size();
  }
  if (idx == 0) return std::nullopt;
  return idx;
}

Composition BinGrid::node_position(std::size_t index) const {
  if (index == 0 || index >= node_count_) throw ParameterError("grid: node index out of range");
  Composition x(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    x[i] = axis_[index % axis_.size()];
    index /= axis_.size();
  }
  return x;
}

namespace {

constexpr std::size_t kDenseNodeLimit = std::size_t{1} << 22;

}  // namespace

Compactor::Compactor(const BinGrid& grid) : grid_(grid), dense_(grid.node_count() <= kDenseNodeLimit) {
  if (dense_) weight_.assign(grid.node_count(), 0.0);
}

void Compactor::deposit(std::size_t node, double w) {
  if (dense_) {
    if (weight_[node] == 0.0) touched_.push_back(node);
    weight_[node] += w;
  } else {
    sparse_[node] += w;
  }
}

void Compactor::add(const Composition& x, double w) {
  const auto axis = grid_.axis();
  const std::size_t d = grid_.dim();
  const std::size_t n = axis.size();
  std::array<std::size_t, kMaxDim> lo{};
  std::array<double, kMaxDim> frac{};
  std::size_t split = 0;
  for (std::size_t i = 0; i < d; ++i) {
    const double v = x[i];
    if (!(v >= 0.0) || !(v <= axis[n - 1])) {
      throw CompactionError("compact: particle at x=" + describe(x) + " (|x|=" + format_double(x.norm()) +
                            ") lies outside grid coverage [" + format_double(grid_.r_min()) + ", " +
                            format_double(grid_.r_max()) + "]");
    }
    const auto it = std::upper_bound(axis.begin(), axis.end(), v) - 1;
    lo[i] = static_cast<std::size_t>(it - axis.begin());
    frac[i] = *it == v ? 0.0 : (v - *it) / (*(it + 1) - *it);
    if (frac[i] > 0.0) split |= std::size_t{1} << i;
  }
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    if ((mask & ~split) != 0) continue;
    double share = w;
    std::size_t idx = 0;
    std::size_t stride = 1;
    for (std::size_t i = 0; i < d; ++i) {
      const bool up = (mask >> i) & 1U;
      if (split & (std::size_t{1} << i)) share *= up ? frac[i] : 1.0 - frac[i];
      idx += (lo[i] + (up ? 1 : 0)) * stride;
      stride *= n;
    }
    if (!(share > 0.0)) continue;
    if (idx == 0) {
      throw CompactionError("compact: particle at x=" + describe(x) + " (|x|=" + format_double(x.norm()) +
                            ") is too close to the origin for grid coverage [" +
                            format_double(grid_.r_min()) + ", " + format_double(grid_.r_max()) + "]");
    }
    deposit(idx, share);
  }
}

void Compactor::add(std::span<const Particle> particles) {
  for (const auto& p : particles) add(p.x, p.w);
}

MeasureState Compactor::take(double time) {
  std::vector<std::pair<std::size_t, double>> nodes;
  if (dense_) {
    nodes.reserve(touched_.size());
    for (std::size_t c : touched_) {
      nodes.emplace_back(c, weight_[c]);
      weight_[c] = 0.0;
    }
    touched_.clear();
  } else {
    nodes.assign(sparse_.begin(), sparse_.end());
    sparse_.clear();
  }
  std::sort(nodes.begin(), nodes.end());
  std::vector<Particle> out;
  out.reserve(nodes.size());
  for (const auto& [c, w] : nodes) {
    if (w > 0.0) out.push_back({grid_.node_position(c), w});
  }
  auto state = MeasureState::from_trusted(grid_.dim(), std::move(out), time);
  state.set_grid_tag(grid_.tag());
  return state;
}

MeasureState compact(const MeasureState& state, const BinGrid& grid) {
  if (state.dim() != grid.dim()) throw CompactionError("compact: grid dimension mismatch");
  Compactor c(grid);
  c.add(state.particles());
  return c.take(state.time());
}

double tv_distance(const MeasureState& a, const MeasureState& b, const BinGrid& grid) {
  if (a.grid_tag() != grid.tag() || b.grid_tag() != grid.tag()) {
    throw ParameterError("tv_distance: states are not compacted on the given grid (grid mismatch)");
  }
  std::vector<std::pair<std::size_t, double>> cells;
  cells.reserve(a.size() + b.size());
  auto push = [&](const MeasureState& s, double sign) {
    for (const auto& p : s.particles()) {
      const auto node = grid.node_of(p.x);
      if (!node) throw ParameterError("tv_distance: atom off the grid nodes");
      cells.emplace_back(*node, sign * p.w);
    }
  };
  push(a, 1.0);
  push(b, -1.0);
  std::stable_sort(cells.begin(), cells.end(),
                   [](const auto& l, const auto& r) { return l.first < r.first; });
  double total = 0.0;
  for (std::size_t i = 0; i < cells.size();) {
    double s = 0.0;
    std::size_t j = i;
    for (; j < cells.size() && cells[j].first == cells[i].first; ++j) s += cells[j].second;
    total += std::abs(s);
    i = j;
  }
  return total;
}

LatticePoint::LatticePoint(std::initializer_list<std::int64_t> values) : dim(values.size()) {
  if (dim == 0 || dim > kMaxDim) throw ParameterError("lattice point dimension out of range");
  std::size_t i = 0;
  for (auto v : values) a[i++] = v;
}

std::int64_t LatticePoint::norm() const noexcept {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < dim; ++i) s += a[i];
  return s;
}

Composition LatticePoint::to_composition() const {
  Composition c(dim);
  for (std::size_t i = 0; i < dim; ++i) c[i] = static_cast<double>(a[i]);
  return c;
}

DiscreteState::DiscreteState(std::size_t dim, std::int64_t size_cap, double time)
    : dim_(dim), size_cap_(size_cap), time_(time) {
  Composition probe(dim);
  (void)probe;
  if (size_cap < 1) throw ParameterError("discrete state: size cap must be >= 1");
}

void DiscreteState::set(const LatticePoint& alpha, double n) {
  if (alpha.dim != dim_) throw DomainError("discrete state: key dimension mismatch");
  for (std::size_t i = 0; i < dim_; ++i) {
    if (alpha.a[i] < 0) throw DomainError("discrete state: negative multi-index entry");
  }
  if (alpha.norm() == 0) throw DomainError("discrete state: zero multi-index");
  if (alpha.norm() > size_cap_) throw DomainError("discrete state: multi-index exceeds size cap");
  if (!(n >= 0.0) || !std::isfinite(n)) throw ParameterError("discrete state: n must be finite and >= 0");
  if (n == 0.0) {
    entries_.erase(alpha);
  } else {
    entries_[alpha] = n;
  }
}

double DiscreteState::get(const LatticePoint& alpha) const {
  const auto it = entries_.find(alpha);
  return it == entries_.end() ? 0.0 : it->second;
}

double moment(const DiscreteState& state, double alpha) {
  double s = 0.0;
  for (const auto& [key, n] : state.entries()) s += n * std::pow(static_cast<double>(key.norm()), alpha);
  return s;
}

Composition mass_vector(const DiscreteState& state) {
  Composition m(state.dim());
  for (const auto& [key, n] : state.entries()) {
    for (std::size_t i = 0; i < state.dim(); ++i) m[i] += n * static_cast<double>(key.a[i]);
  }
  return m;
}

MeasureState to_measure(const DiscreteState& state) {
  std::vector<Particle> ps;
  ps.reserve(state.entries().size());
  for (const auto& [key, n] : state.entries()) ps.push_back({key.to_composition(), n});
  return MeasureState::from_trusted(state.dim(), std::move(ps), state.time());
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void write_preamble(std::ostream& os, double t, std::size_t d) {
  os << "# t=" << format_double(t) << " d=" << d << "\n";
}

struct CsvTable {
  double t = 0.0;
  std::size_t d = 0;
  std::vector<std::vector<double>> rows;
};

double parse_number(const std::string& cell, std::size_t line) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw IoError("csv: malformed number '" + cell + "' on line " + std::to_string(line));
  }
  return v;
}

CsvTable read_table(std::istream& is, const std::string& first_col, const std::string& last_col) {
  CsvTable tab;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) throw IoError("csv: empty input");
  ++lineno;
  {
    double t = 0.0;
    unsigned long d = 0;
    if (std::sscanf(line.c_str(), "# t=%lf d=%lu", &t, &d) != 2 || d == 0 || d > kMaxDim) {
      throw IoError("csv: missing or malformed preamble '# t=<time> d=<dim>'");
    }
    tab.t = t;
    tab.d = d;
  }
  if (!std::getline(is, line)) throw IoError("csv: missing header row");
  ++lineno;
  {
    std::string expect;
    for (std::size_t i = 0; i < tab.d; ++i) expect += first_col + std::to_string(i + 1) + ",";
    expect += last_col;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expect) throw IoError("csv: header '" + line + "' does not match '" + expect + "'");
  }
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_number(cell, lineno));
    if (row.size() != tab.d + 1) {
      throw IoError("csv: wrong column count on line " + std::to_string(lineno));
    }
    tab.rows.push_back(std::move(row));
  }
  return tab;
}

}  // namespace

void write_state_csv(std::ostream& os, const MeasureState& state) {
  write_preamble(os, state.time(), state.dim());
  for (std::size_t i = 0; i < state.dim(); ++i) os << "x" << (i + 1) << ",";
  os << "w\n";
  for (const auto& p : state.particles()) {
    for (std::size_t i = 0; i < state.dim(); ++i) os << format_double(p.x[i]) << ",";
    os << format_double(p.w) << "\n";
  }
}

MeasureState read_state_csv(std::istream& is) {
  const auto tab = read_table(is, "x", "w");
  MeasureState s(tab.d, tab.t);
  for (const auto& row : tab.rows) {
    s.add(Composition::from_span(std::span<const double>(row.data(), tab.d)), row[tab.d]);
  }
  return s;
}

void write_lattice_csv(std::ostream& os, const DiscreteState& state) {
  write_preamble(os, state.time(), state.dim());
  for (std::size_t i = 0; i < state.dim(); ++i) os << "alpha_" << (i + 1) << ",";
  os << "n\n";
  for (const auto& [key, n] : state.entries()) {
    for (std::size_t i = 0; i < state.dim(); ++i) os << key.a[i] << ",";
    os << format_double(n) << "\n";
  }
}

MeasureState read_lattice_csv(std::istream& is) {
  const auto tab = read_table(is, "alpha_", "n");
  MeasureState s(tab.d, tab.t);
  for (const auto& row : tab.rows) {
    for (std::size_t i = 0; i < tab.d; ++i) {
      if (row[i] != std::floor(row[i])) throw IoError("lattice csv: non-integer multi-index entry");
    }
    if (row[tab.d] > 0.0) s.add(Composition::from_span(std::span<const double>(row.data(), tab.d)), row[tab.d]);
  }
  return s;
}

}  // namespace coagsim
