#include "afmap/pointwise.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "afmap/error.hpp"
#include "afmap/fmap.hpp"

namespace afmap {

PointwiseMap PointwiseMap::hard(std::vector<int> indices, int source_count) {
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= source_count) {
      throw InvalidRangeError("hard map entry " + std::to_string(i) + " = " +
                              std::to_string(indices[i]) + " outside [0, " +
                              std::to_string(source_count) + ")");
    }
  }
  PointwiseMap m;
  m.rep_ = std::move(indices);
  m.source_count_ = source_count;
  return m;
}

PointwiseMap PointwiseMap::soft(Eigen::MatrixXd probabilities) {
  if ((probabilities.array() < 0.0).any() || !probabilities.allFinite()) {
    throw InvalidRangeError("soft map has negative or non-finite entries");
  }
  const Eigen::VectorXd sums = probabilities.rowwise().sum();
  for (Eigen::Index i = 0; i < sums.size(); ++i) {
    if (std::abs(sums[i] - 1.0) > 1e-9) {
      throw InvalidRangeError("soft map row " + std::to_string(i) + " sums to " + std::to_string(sums[i]));
    }
  }
  PointwiseMap m;
  m.source_count_ = static_cast<int>(probabilities.cols());
  m.rep_ = std::move(probabilities);
  return m;
}

int PointwiseMap::target_count() const {
  return is_hard() ? static_cast<int>(indices().size()) : static_cast<int>(probabilities().rows());
}

Eigen::MatrixXd PointwiseMap::apply(const Eigen::MatrixXd& values) const {
  if (values.rows() != source_count_) {
    throw DimensionMismatchError("PointwiseMap::apply: expected " + std::to_string(source_count_) +
                                 " rows, got " + std::to_string(values.rows()));
  }
  if (!is_hard()) return probabilities() * values;
  const auto& idx = indices();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), values.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = values.row(idx[i]);
  return out;
}

Eigen::MatrixXd PointwiseMap::apply_transpose(const Eigen::MatrixXd& values) const {
  if (values.rows() != target_count()) {
    throw DimensionMismatchError("PointwiseMap::apply_transpose: row count mismatch");
  }
  if (!is_hard()) return probabilities().transpose() * values;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(source_count_, values.cols());
  const auto& idx = indices();
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(idx[i]) += values.row(static_cast<Eigen::Index>(i));
  return out;
}

Eigen::MatrixXd PointwiseMap::dense() const {
  if (!is_hard()) return probabilities();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(target_count(), source_count_);
  const auto& idx = indices();
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i), idx[i]) = 1.0;
  return out;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double shift = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - shift).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

PointwiseMap soft_map(const FeatureSet& fx, const FeatureSet& fy, double alpha) {
  if (fx.dim() != fy.dim()) {
    throw DimensionMismatchError("soft_map: feature dimensions " + std::to_string(fx.dim()) + " vs " +
                                 std::to_string(fy.dim()));
  }
  if (!(alpha > 0.0)) throw InvalidRangeError("soft_map: α must be positive");
  Eigen::MatrixXd p = softmax_rows(fy.values * fx.values.transpose() / alpha);
  return PointwiseMap::soft(std::move(p));
}

PointwiseMap nn_map(const Eigen::MatrixXd& emb_y, const Eigen::MatrixXd& emb_x) {
  if (emb_y.cols() != emb_x.cols()) {
    throw DimensionMismatchError("nn_map: embedding widths " + std::to_string(emb_y.cols()) + " vs " +
                                 std::to_string(emb_x.cols()));
  }
  const Eigen::Index ny = emb_y.rows(), nx = emb_x.rows();
  if (nx == 0) throw DimensionMismatchError("nn_map: empty source embedding");
  // Row-major copies so each distance is a contiguous scan.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> ey = emb_y, ex = emb_x;
  const Eigen::Index w = ey.cols();
  std::vector<int> idx(static_cast<std::size_t>(ny));
  for (Eigen::Index i = 0; i < ny; ++i) {
    const double* a = ey.data() + i * w;
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Eigen::Index j = 0; j < nx; ++j) {
      const double* b = ex.data() + j * w;
      double d = 0.0;
      for (Eigen::Index c = 0; c < w; ++c) {
        const double diff = a[c] - b[c];
        d += diff * diff;
      }
      if (d < best) {
        best = d;
        arg = static_cast<int>(j);
      }
    }
    idx[static_cast<std::size_t>(i)] = arg;
  }
  return PointwiseMap::hard(std::move(idx), static_cast<int>(nx));
}

PointwiseMap recover_map(const FunctionalMap& C, const LearnableBasis& bx, const LearnableBasis& by) {
  const int k = C.k();
  if (k > bx.k() || k > by.k() || C.C.cols() != k) {
    throw InvalidRangeError("recover_map: functional map order " + std::to_string(k) +
                            " inconsistent with bases");
  }
  return nn_map(by.psi(k), bx.psi(k) * C.C.transpose());
}

double alignment_energy(const PointwiseMap& pi, const FunctionalMap& C, const LearnableBasis& bx,
                        const LearnableBasis& by) {
  const int k = C.k();
  return (by.psi(k) - pi.apply(bx.psi(k)) * C.C.transpose()).squaredNorm();
}

std::vector<int> truncation_schedule(int k_init, int k_end, int step) {
  if (k_init < 1 || k_end < k_init || step < 1) {
    throw InvalidRangeError("invalid truncation schedule (" + std::to_string(k_init) + ", " +
                            std::to_string(k_end) + ", " + std::to_string(step) + ")");
  }
  std::vector<int> ks;
  for (int k = k_init; k < k_end; k += step) ks.push_back(k);
  ks.push_back(k_end);
  return ks;
}

ZoomOutResult g_zoomout(const PointwiseMap& pi_init, const LearnableBasis& bx, const LearnableBasis& by,
                        int k_init, int k_end, int step) {
  if (k_end > bx.k() || k_end > by.k()) {
    throw InvalidRangeError("g_zoomout: k_end = " + std::to_string(k_end) + " exceeds basis order");
  }
  ZoomOutResult out{pi_init, truncation_schedule(k_init, k_end, step), {}};
  for (int k : out.orders) {
    const FunctionalMap C = fmap_project(out.map, bx, by, k);
    out.map = recover_map(C, bx, by);
    out.energy_trace.push_back(alignment_energy(out.map, C, bx, by));
  }
  return out;
}

double mrs_loss(const PointwiseMap& pi, const LearnableBasis& bx, const LearnableBasis& by, int k_init,
                int k_end, int step) {
  if (k_end > bx.k() || k_end > by.k()) {
    throw InvalidRangeError("mrs_loss: k_end = " + std::to_string(k_end) + " exceeds basis order");
  }
  double total = 0.0;
  for (int k : truncation_schedule(k_init, k_end, step)) {
    total += alignment_energy(pi, fmap_project(pi, bx, by, k), bx, by);
  }
  return total;
}

}  // namespace afmap
