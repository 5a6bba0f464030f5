#include "afmap/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "afmap/error.hpp"
#include "afmap/pointwise.hpp"

namespace afmap {

namespace {

struct TermGrad {
  Eigen::VectorXd gains;  // ∂/∂g
  Eigen::MatrixXd emb_x;  // ∂/∂(F_X A)
  Eigen::MatrixXd emb_y;  // ∂/∂(F_Y A)
};

// One direction of the loss: Π = softmax(E_Y E_Xᵀ / α) maps X-functions to Y.
double directional_loss(const Spectrum& sx, const Spectrum& sy, const Eigen::MatrixXd& ex,
                        const Eigen::MatrixXd& ey, const Eigen::VectorXd& g, const TrainConfig& cfg,
                        TermGrad* grad) {
  const Eigen::MatrixXd pi = softmax_rows(ey * ex.transpose() / cfg.alpha);
  const Eigen::MatrixXd phim_y = sy.pinv(cfg.k_end);
  Eigen::MatrixXd pi_bar;
  if (grad) {
    pi_bar = Eigen::MatrixXd::Zero(pi.rows(), pi.cols());
    grad->gains = Eigen::VectorXd::Zero(g.size());
  }

  double loss = 0.0;
  for (int k : truncation_schedule(cfg.k_init, cfg.k_end, cfg.k_step)) {
    const Eigen::VectorXd gk = g.head(k);
    const auto phi_x = sx.phi().leftCols(k);
    const auto phi_y = sy.phi().leftCols(k);
    const auto phim = phim_y.topRows(k);
    const Eigen::MatrixXd psi_x = phi_x * gk.asDiagonal();
    const Eigen::MatrixXd psi_y = phi_y * gk.asDiagonal();
    const Eigen::MatrixXd psi_d = gk.cwiseInverse().asDiagonal() * phim;
    const Eigen::MatrixXd px = pi * psi_x;
    const Eigen::MatrixXd c = psi_d * px;
    const Eigen::MatrixXd r = psi_y - px * c.transpose();
    loss += r.squaredNorm();
    if (!grad) continue;

    const Eigen::MatrixXd r_bar = 2.0 * r;
    const Eigen::MatrixXd c_bar = -r_bar.transpose() * px;
    const Eigen::MatrixXd px_bar = -r_bar * c + psi_d.transpose() * c_bar;
    const Eigen::MatrixXd psi_d_bar = c_bar * px.transpose();
    const Eigen::MatrixXd psi_x_bar = pi.transpose() * px_bar;
    pi_bar.noalias() += px_bar * psi_x.transpose();

    grad->gains.head(k) += phi_x.cwiseProduct(psi_x_bar).colwise().sum().transpose();
    grad->gains.head(k) += phi_y.cwiseProduct(r_bar).colwise().sum().transpose();
    grad->gains.head(k) -= (psi_d_bar.cwiseProduct(phim).rowwise().sum().array() / gk.array().square()).matrix();
  }

  if (grad) {
    const Eigen::VectorXd row_dot = pi_bar.cwiseProduct(pi).rowwise().sum();
    const Eigen::MatrixXd s_bar = pi.cwiseProduct(pi_bar.colwise() - row_dot) / cfg.alpha;
    grad->emb_y = s_bar * ex;
    grad->emb_x = s_bar.transpose() * ey;
  }
  return loss;
}

void check_pair(const ShapePair& pair, const Eigen::VectorXd& times, const Eigen::MatrixXd& transform,
                const TrainConfig& cfg) {
  if (!pair.x || !pair.y || !pair.x->spectrum || !pair.y->spectrum) {
    throw DimensionMismatchError("training pair is missing a shape bundle");
  }
  const Spectrum& sx = *pair.x->spectrum;
  const Spectrum& sy = *pair.y->spectrum;
  if (sx.k() != times.size() || sy.k() != times.size()) {
    throw DimensionMismatchError("filter order " + std::to_string(times.size()) + " vs spectra " +
                                 std::to_string(sx.k()) + " / " + std::to_string(sy.k()));
  }
  if (cfg.k_end > times.size()) {
    throw InvalidRangeError("k_end = " + std::to_string(cfg.k_end) + " exceeds spectrum order " +
                            std::to_string(times.size()));
  }
  if (pair.x->features.dim() != transform.rows() || pair.y->features.dim() != transform.rows()) {
    throw DimensionMismatchError("feature dimension does not match the transform");
  }
  if (pair.x->features.vertex_count() != sx.vertex_count() ||
      pair.y->features.vertex_count() != sy.vertex_count()) {
    throw DimensionMismatchError("features do not match spectrum vertex counts");
  }
}

double total_loss(const Eigen::VectorXd& times, const Eigen::MatrixXd& transform, const ShapePair& pair,
                  const TrainConfig& cfg, Eigen::VectorXd* grad_t, Eigen::MatrixXd* grad_a) {
  const Eigen::VectorXd g = (-times.array()).exp().matrix();
  const Eigen::MatrixXd& fx = pair.x->features.values;
  const Eigen::MatrixXd& fy = pair.y->features.values;
  const Eigen::MatrixXd ex = fx * transform;
  const Eigen::MatrixXd ey = fy * transform;
  const bool want = grad_t != nullptr;
  TermGrad fwd, bwd;
  double loss = directional_loss(*pair.x->spectrum, *pair.y->spectrum, ex, ey, g, cfg, want ? &fwd : nullptr);
  if (cfg.bidirectional) {
    loss += directional_loss(*pair.y->spectrum, *pair.x->spectrum, ey, ex, g, cfg, want ? &bwd : nullptr);
  }
  if (want) {
    Eigen::VectorXd g_bar = fwd.gains;
    Eigen::MatrixXd ex_bar = fwd.emb_x, ey_bar = fwd.emb_y;
    if (cfg.bidirectional) {
      g_bar += bwd.gains;
      ex_bar += bwd.emb_y;
      ey_bar += bwd.emb_x;
    }
    *grad_t = -g.cwiseProduct(g_bar);
    *grad_a = fx.transpose() * ex_bar + fy.transpose() * ey_bar;
  }
  return loss;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidRangeError("learning_rate must be > 0");
  if (iterations < 0) throw InvalidRangeError("iterations must be >= 0");
  if (!(alpha > 0.0)) throw InvalidRangeError("alpha must be > 0");
  truncation_schedule(k_init, k_end, k_step);
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidRangeError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw InvalidRangeError("Adam epsilon must be > 0");
  if (!(fd_step > 0.0)) throw InvalidRangeError("finite-difference step must be > 0");
}

TrainState TrainState::initial(int k, int d, int d_out) {
  if (d_out < 0) d_out = d;
  TrainState s;
  s.filter = InhibitionFilter(k);
  s.transform = FeatureTransform::identity(d, d_out);
  s.m_t = s.v_t = Eigen::VectorXd::Zero(k);
  s.m_a = s.v_a = Eigen::MatrixXd::Zero(d, d_out);
  return s;
}

double evaluate_loss(const Eigen::VectorXd& times, const Eigen::MatrixXd& transform, const ShapePair& pair,
                     const TrainConfig& config) {
  check_pair(pair, times, transform, config);
  const double loss = total_loss(times, transform, pair, config, nullptr, nullptr);
  if (!std::isfinite(loss)) throw NonFiniteLossError("loss is not finite");
  return loss;
}

LossGradient loss_and_gradient(const TrainState& state, const ShapePair& pair, const TrainConfig& config) {
  const Eigen::VectorXd& t = state.filter.times();
  const Eigen::MatrixXd& a = state.transform.weights;
  check_pair(pair, t, a, config);
  LossGradient out;
  if (config.gradient_mode == GradientMode::Analytic) {
    out.loss = total_loss(t, a, pair, config, &out.grad_t, &out.grad_a);
  } else {
    out.loss = total_loss(t, a, pair, config, nullptr, nullptr);
    const double h = config.fd_step;
    out.grad_t = Eigen::VectorXd::Zero(t.size());
    out.grad_a = Eigen::MatrixXd::Zero(a.rows(), a.cols());
    if (config.learn_basis) {
      Eigen::VectorXd tp = t;
      for (Eigen::Index i = 0; i < t.size(); ++i) {
        tp[i] = t[i] + h;
        const double up = total_loss(tp, a, pair, config, nullptr, nullptr);
        tp[i] = t[i] - h;
        const double down = total_loss(tp, a, pair, config, nullptr, nullptr);
        tp[i] = t[i];
        out.grad_t[i] = (up - down) / (2.0 * h);
      }
    }
    if (config.learn_transform) {
      Eigen::MatrixXd ap = a;
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
          ap(i, j) = a(i, j) + h;
          const double up = total_loss(t, ap, pair, config, nullptr, nullptr);
          ap(i, j) = a(i, j) - h;
          const double down = total_loss(t, ap, pair, config, nullptr, nullptr);
          ap(i, j) = a(i, j);
          out.grad_a(i, j) = (up - down) / (2.0 * h);
        }
      }
    }
  }
  if (!config.learn_basis) out.grad_t.setZero();
  if (!config.learn_transform) out.grad_a.setZero();
  if (!std::isfinite(out.loss) || !out.grad_t.allFinite() || !out.grad_a.allFinite()) {
    throw NonFiniteLossError("non-finite loss or gradient", state.iteration);
  }
  return out;
}

TrainState train(const std::vector<ShapePair>& pairs, const TrainConfig& config) {
  if (pairs.empty()) throw InvalidRangeError("train: empty pair list");
  if (!pairs.front().x || !pairs.front().x->spectrum) throw DimensionMismatchError("train: missing shape bundle");
  return train(pairs, config, TrainState::initial(pairs.front().x->spectrum->k(), pairs.front().x->features.dim()));
}

TrainState train(const std::vector<ShapePair>& pairs, const TrainConfig& config, TrainState state) {
  config.validate();
  if (pairs.empty()) throw InvalidRangeError("train: empty pair list");
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);

  for (int it = 0; it < config.iterations; ++it) {
    const std::size_t slot = static_cast<std::size_t>(it) % pairs.size();
    if (slot == 0 && config.shuffle) std::shuffle(order.begin(), order.end(), rng);
    LossGradient lg;
    try {
      lg = loss_and_gradient(state, pairs[order[slot]], config);
    } catch (const NonFiniteLossError& e) {
      throw NonFiniteLossError("training diverged at iteration " + std::to_string(state.iteration) + ": " +
                                   e.what(),
                               state.iteration);
    }
    state.loss_history.push_back(lg.loss);
    ++state.iteration;

    Eigen::VectorXd t = state.filter.times();
    Eigen::MatrixXd& a = state.transform.weights;
    if (config.optimizer == Optimizer::SGD) {
      t -= config.learning_rate * lg.grad_t;
      a -= config.learning_rate * lg.grad_a;
    } else {
      const double b1 = config.beta1, b2 = config.beta2;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.iteration));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.iteration));
      state.m_t = b1 * state.m_t + (1.0 - b1) * lg.grad_t;
      state.v_t = b2 * state.v_t + (1.0 - b2) * lg.grad_t.cwiseAbs2();
      state.m_a = b1 * state.m_a + (1.0 - b1) * lg.grad_a;
      state.v_a = b2 * state.v_a + (1.0 - b2) * lg.grad_a.cwiseAbs2();
      t.array() -= config.learning_rate * (state.m_t.array() / c1) /
                   ((state.v_t.array() / c2).sqrt() + config.epsilon);
      a.array() -= config.learning_rate * (state.m_a.array() / c1) /
                   ((state.v_a.array() / c2).sqrt() + config.epsilon);
    }
    state.filter = InhibitionFilter(t.cwiseMax(0.0));
  }
  return state;
}

std::vector<std::pair<int, double>> inhibition_profile(const TrainState& state) {
  const Eigen::VectorXd g = state.filter.gains();
  std::vector<std::pair<int, double>> out;
  out.reserve(static_cast<std::size_t>(g.size()));
  for (Eigen::Index i = 0; i < g.size(); ++i) out.emplace_back(static_cast<int>(i), g[i]);
  return out;
}

}  // namespace afmap
