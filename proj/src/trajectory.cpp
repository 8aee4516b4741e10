#include "coagsim/trajectory.hpp"

#include <cmath>

#include "coagsim/errors.hpp"

namespace coagsim {

void Trajectory::append(TrajectorySample sample) {
  if (sample.state.dim() != dim_) throw ParameterError("trajectory: sample dimension mismatch");
  if (!samples_.empty() && !(sample.t > samples_.back().t)) {
    throw ParameterError("trajectory: sample times must be strictly increasing");
  }
  if (sample.truncation_flux.dim() == 0) sample.truncation_flux = Composition(dim_);
  samples_.push_back(std::move(sample));
}

std::vector<double> Trajectory::times() const {
  std::vector<double> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.t);
  return out;
}

std::vector<double> Trajectory::moment_series(double alpha) const {
  std::vector<double> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(moment(s.state, alpha));
  return out;
}

std::vector<Composition> Trajectory::mass_series() const {
  std::vector<Composition> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(mass_vector(s.state));
  return out;
}

const TrajectorySample& Trajectory::nearest(double t) const {
  if (samples_.empty()) throw ParameterError("trajectory: no samples");
  std::size_t best = 0;
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    if (std::abs(samples_[i].t - t) < std::abs(samples_[best].t - t)) best = i;
  }
  return samples_[best];
}

}  // namespace coagsim
