#include "afmap/basis.hpp"

#include <cmath>
#include <string>

#include "afmap/error.hpp"

namespace afmap {

namespace {
constexpr double kMinGain = 1e-300;
}

InhibitionFilter::InhibitionFilter(int k) : times_(Eigen::VectorXd::Zero(k)) {}

InhibitionFilter::InhibitionFilter(Eigen::VectorXd times) : times_(std::move(times)) {
  for (Eigen::Index i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i]) || times_[i] < 0.0) {
      throw InvalidRangeError("inhibition time t[" + std::to_string(i) + "] = " +
                              std::to_string(times_[i]) + " is not a finite value >= 0");
    }
  }
}

LearnableBasis::LearnableBasis(std::shared_ptr<const Spectrum> spectrum, Eigen::VectorXd gains)
    : spectrum_(std::move(spectrum)), gains_(std::move(gains)) {
  if (!spectrum_) throw DimensionMismatchError("LearnableBasis: null spectrum");
  if (gains_.size() != spectrum_->k()) {
    throw DimensionMismatchError("LearnableBasis: " + std::to_string(gains_.size()) +
                                 " gains for a spectrum of order " + std::to_string(spectrum_->k()));
  }
  if ((gains_.array() < kMinGain).any() || !gains_.allFinite()) {
    throw GainUnderflowError("LearnableBasis: a gain is below 1e-300; Ψ† would overflow");
  }
  psi_ = spectrum_->phi() * gains_.asDiagonal();
}

Eigen::MatrixXd LearnableBasis::pinv(int rows) const {
  if (rows < 0 || rows > k()) {
    throw InvalidRangeError("LearnableBasis::pinv: " + std::to_string(rows) + " rows requested of " +
                            std::to_string(k()));
  }
  return gains_.head(rows).cwiseInverse().asDiagonal() *
         (spectrum_->phi().leftCols(rows).transpose() * spectrum_->mass().asDiagonal());
}

LearnableBasis make_basis(std::shared_ptr<const Spectrum> spec, const InhibitionFilter& filter) {
  if (!spec || filter.k() != spec->k()) {
    throw DimensionMismatchError("make_basis: filter of order " + std::to_string(filter.k()) +
                                 " for spectrum of order " + std::to_string(spec ? spec->k() : -1));
  }
  return LearnableBasis(std::move(spec), filter.gains());
}

std::pair<LearnableBasis, LearnableBasis> shared_filter_pair(std::shared_ptr<const Spectrum> spec_x,
                                                             std::shared_ptr<const Spectrum> spec_y,
                                                             const InhibitionFilter& filter) {
  return {make_basis(std::move(spec_x), filter), make_basis(std::move(spec_y), filter)};
}

}  // namespace afmap
