#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "afmap/basis.hpp"
#include "afmap/descriptors.hpp"
#include "afmap/spectral.hpp"

namespace afmap {

/// Everything the training loop needs about one shape.
struct ShapeBundle {
  std::string name;
  std::shared_ptr<const Spectrum> spectrum;
  FeatureSet features;
};

struct ShapePair {
  std::shared_ptr<const ShapeBundle> x;
  std::shared_ptr<const ShapeBundle> y;
};

enum class Optimizer { Adam, SGD };
enum class GradientMode { Analytic, FiniteDifference };

struct TrainConfig {
  double learning_rate = 1e-2;
  int iterations = 200;
  double alpha = 0.07;
  int k_init = 20;
  int k_end = 40;
  int k_step = 10;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  GradientMode gradient_mode = GradientMode::Analytic;
  double fd_step = 1e-5;
  /// Adds the Y→X term with the roles of the shapes swapped.
  bool bidirectional = false;
  /// Shuffle the pair order once per pass over the list (seeded).
  bool shuffle = false;
  /// Freezing T gives the fixed-basis ablation.
  bool learn_basis = true;
  bool learn_transform = true;

  /// Throws InvalidRangeError.
  void validate() const;
};

struct TrainState {
  InhibitionFilter filter;
  FeatureTransform transform;
  Eigen::VectorXd m_t, v_t;
  Eigen::MatrixXd m_a, v_a;
  std::vector<double> loss_history;
  long iteration = 0;

  /// T ≡ 0, A = identity (d x d_out), zero moments.
  static TrainState initial(int k, int d, int d_out = -1);
};

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd grad_t;
  Eigen::MatrixXd grad_a;
};

/// Multi-resolution loss of soft_map(F·A) under the shared filter of `state`,
/// and its gradient w.r.t. T and A. Throws NonFiniteLossError.
LossGradient loss_and_gradient(const TrainState& state, const ShapePair& pair, const TrainConfig& config);

/// Loss only.
double evaluate_loss(const Eigen::VectorXd& times, const Eigen::MatrixXd& transform, const ShapePair& pair,
                     const TrainConfig& config);

/// Runs config.iterations optimizer steps round-robin over `pairs`.
TrainState train(const std::vector<ShapePair>& pairs, const TrainConfig& config);
/// Continues from `state`.
TrainState train(const std::vector<ShapePair>& pairs, const TrainConfig& config, TrainState state);

/// (index, gain) in index order.
std::vector<std::pair<int, double>> inhibition_profile(const TrainState& state);

}  // namespace afmap
