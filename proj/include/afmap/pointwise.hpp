#pragma once

#include <variant>
#include <vector>

#include <Eigen/Core>

#include "afmap/basis.hpp"
#include "afmap/descriptors.hpp"

namespace afmap {

struct FunctionalMap;

/// Π_YX: assigns every target (Y) vertex a source (X) vertex, either as an
/// index array (hard) or a row-stochastic |V_Y| x |V_X| matrix (soft).
class PointwiseMap {
 public:
  /// Throws InvalidRangeError on an index outside [0, source_count).
  static PointwiseMap hard(std::vector<int> indices, int source_count);
  /// Throws InvalidRangeError unless every row is nonnegative and sums to 1 ± 1e-9.
  static PointwiseMap soft(Eigen::MatrixXd probabilities);

  bool is_hard() const { return std::holds_alternative<std::vector<int>>(rep_); }
  const std::vector<int>& indices() const { return std::get<std::vector<int>>(rep_); }
  const Eigen::MatrixXd& probabilities() const { return std::get<Eigen::MatrixXd>(rep_); }

  int target_count() const;
  int source_count() const { return source_count_; }

  /// Π · values, values being |V_X| x c.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& values) const;
  /// Πᵀ · values, values being |V_Y| x c.
  Eigen::MatrixXd apply_transpose(const Eigen::MatrixXd& values) const;
  Eigen::MatrixXd dense() const;

 private:
  std::variant<std::vector<int>, Eigen::MatrixXd> rep_;
  int source_count_ = 0;
};

/// Row-wise Softmax(F_Y F_Xᵀ / α), logits shifted by the row max.
PointwiseMap soft_map(const FeatureSet& fx, const FeatureSet& fy, double alpha);
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

/// For each row of emb_y, the index of the Euclidean-nearest row of emb_x;
/// ties go to the lowest index.
PointwiseMap nn_map(const Eigen::MatrixXd& emb_y, const Eigen::MatrixXd& emb_x);

/// NN(Ψ_Y,k′, Ψ_X,k′ Cᵀ) at k′ = C.k().
PointwiseMap recover_map(const FunctionalMap& C, const LearnableBasis& bx, const LearnableBasis& by);

/// ‖Ψ_Y,k − Π Ψ_X,k Cᵀ‖²_F.
double alignment_energy(const PointwiseMap& pi, const FunctionalMap& C, const LearnableBasis& bx,
                        const LearnableBasis& by);

/// Truncation orders k_init, k_init + step, ..., always ending at k_end.
std::vector<int> truncation_schedule(int k_init, int k_end, int step);

struct ZoomOutResult {
  PointwiseMap map;
  std::vector<int> orders;
  std::vector<double> energy_trace;
};

/// Alternates C = Ψ_Y†ΠΨ_X and Π = NN(Ψ_Y, Ψ_X Cᵀ) while k grows from
/// k_init to k_end. Throws InvalidRangeError for an invalid schedule.
ZoomOutResult g_zoomout(const PointwiseMap& pi_init, const LearnableBasis& bx, const LearnableBasis& by,
                        int k_init, int k_end, int step = 1);

/// Σ_k ‖Ψ_Y,k − Π Ψ_X,k (C_k)ᵀ‖²_F with C_k = Ψ_Y,k† Π Ψ_X,k.
double mrs_loss(const PointwiseMap& pi, const LearnableBasis& bx, const LearnableBasis& by, int k_init,
                int k_end, int step);

}  // namespace afmap
