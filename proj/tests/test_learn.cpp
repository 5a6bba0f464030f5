#include <cmath>
#include <memory>

#include "doctest.h"

#include "afmap/bench.hpp"
#include "afmap/error.hpp"
#include "afmap/learn.hpp"
#include "afmap/pointwise.hpp"
#include "support.hpp"

using namespace afmap;

namespace {

std::shared_ptr<const ShapeBundle> bundle(const TriMesh& mesh, int k, const std::string& name) {
  auto spec = std::make_shared<const Spectrum>(eigendecompose(build_operators(mesh), k));
  FeatureSet f = hks(*spec, default_hks_times(*spec, 6));
  return std::make_shared<const ShapeBundle>(ShapeBundle{name, spec, std::move(f)});
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.k_init = 6;
  cfg.k_end = 12;
  cfg.k_step = 3;
  cfg.alpha = 0.5;
  return cfg;
}

// Central differences of the loss, one parameter at a time.
LossGradient fd_oracle(const TrainState& s, const ShapePair& pair, const TrainConfig& cfg, double h) {
  LossGradient g;
  g.loss = evaluate_loss(s.filter.times(), s.transform.weights, pair, cfg);
  g.grad_t.resize(s.filter.times().size());
  for (Eigen::Index i = 0; i < g.grad_t.size(); ++i) {
    Eigen::VectorXd tp = s.filter.times(), tm = s.filter.times();
    tp[i] += h;
    tm[i] -= h;
    g.grad_t[i] = (evaluate_loss(tp, s.transform.weights, pair, cfg) - evaluate_loss(tm, s.transform.weights, pair, cfg)) /
                  (2 * h);
  }
  g.grad_a.resize(s.transform.weights.rows(), s.transform.weights.cols());
  for (Eigen::Index j = 0; j < g.grad_a.cols(); ++j) {
    for (Eigen::Index i = 0; i < g.grad_a.rows(); ++i) {
      Eigen::MatrixXd ap = s.transform.weights, am = s.transform.weights;
      ap(i, j) += h;
      am(i, j) -= h;
      g.grad_a(i, j) = (evaluate_loss(s.filter.times(), ap, pair, cfg) - evaluate_loss(s.filter.times(), am, pair, cfg)) /
                       (2 * h);
    }
  }
  return g;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-4 * std::max(std::abs(a), std::abs(b)) + 1e-7; }

}  // namespace

TEST_CASE("training config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidRangeError);
  c = TrainConfig{};
  c.k_init = 50;
  CHECK_THROWS_AS(c.validate(), InvalidRangeError);
  c = TrainConfig{};
  c.alpha = -1.0;
  CHECK_THROWS_AS(c.validate(), InvalidRangeError);
  c = TrainConfig{};
  c.beta1 = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidRangeError);
}

TEST_CASE("analytic gradient matches central differences") {
  const auto x = bundle(testsupport::bumpy_sphere(1, 1), 12, "x");
  const auto y = bundle(testsupport::bumpy_sphere(1, 2), 12, "y");
  std::mt19937_64 rng(3);
  for (bool bidirectional : {false, true}) {
    TrainConfig cfg = small_config();
    cfg.bidirectional = bidirectional;
    for (const ShapePair& pair : {ShapePair{x, x}, ShapePair{x, y}}) {
      TrainState s = TrainState::initial(12, 6, 4);
      s.filter = InhibitionFilter(testsupport::random_times(12, rng, 1.0));
      s.transform.weights += 0.3 * testsupport::random_matrix(6, 4, rng);
      const LossGradient an = loss_and_gradient(s, pair, cfg);
      const LossGradient fd = fd_oracle(s, pair, cfg, 1e-5);
      CHECK(std::isfinite(an.loss));
      CHECK(an.loss == doctest::Approx(fd.loss).epsilon(1e-12));
      for (Eigen::Index i = 0; i < an.grad_t.size(); ++i) CHECK(close(an.grad_t[i], fd.grad_t[i]));
      for (Eigen::Index i = 0; i < an.grad_a.size(); ++i) CHECK(close(an.grad_a.data()[i], fd.grad_a.data()[i]));
    }
  }
}

TEST_CASE("finite-difference mode uses the same oracle") {
  const auto x = bundle(testsupport::bumpy_sphere(1, 1), 12, "x");
  TrainConfig cfg = small_config();
  cfg.gradient_mode = GradientMode::FiniteDifference;
  const TrainState s = TrainState::initial(12, 6);
  const LossGradient fd = loss_and_gradient(s, {x, x}, cfg);
  const LossGradient ref = fd_oracle(s, {x, x}, cfg, cfg.fd_step);
  CHECK((fd.grad_t - ref.grad_t).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, ref.grad_t.cwiseAbs().maxCoeff()));
}

TEST_CASE("indices outside the schedule get zero gradient") {
  const auto x = bundle(testsupport::bumpy_sphere(1, 4), 16, "x");
  const auto y = bundle(testsupport::bumpy_sphere(1, 5), 16, "y");
  const TrainConfig cfg = small_config();  // k_end = 12 < 16
  std::mt19937_64 rng(1);
  TrainState s = TrainState::initial(16, 6);
  s.filter = InhibitionFilter(testsupport::random_times(16, rng, 1.0));
  const LossGradient g = loss_and_gradient(s, {x, y}, cfg);
  for (int i = 12; i < 16; ++i) CHECK(g.grad_t[i] == 0.0);
  CHECK(g.grad_t.head(12).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("loss depends on α only through the soft map") {
  const auto x = bundle(testsupport::bumpy_sphere(1, 4), 12, "x");
  const auto y = bundle(testsupport::bumpy_sphere(1, 5), 12, "y");
  TrainConfig cfg = small_config();
  const TrainState s = TrainState::initial(12, 6);
  for (double alpha : {0.2, 0.4}) {
    cfg.alpha = alpha;
    const PointwiseMap pi = soft_map(x->features, y->features, alpha);
    const auto [bx, by] = shared_filter_pair(x->spectrum, y->spectrum, s.filter);
    const double expect = mrs_loss(pi, bx, by, cfg.k_init, cfg.k_end, cfg.k_step);
    CHECK(evaluate_loss(s.filter.times(), s.transform.weights, {x, y}, cfg) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("training descends, keeps T nonnegative and is reproducible") {
  const auto x = bundle(testsupport::bumpy_sphere(1, 6), 12, "x");
  TrainConfig cfg = small_config();
  cfg.iterations = 50;
  cfg.learning_rate = 1e-2;
  const TrainState s = train({{x, x}}, cfg);
  REQUIRE(s.loss_history.size() == 50);
  CHECK(s.iteration == 50);
  const double final_loss = evaluate_loss(s.filter.times(), s.transform.weights, {x, x}, cfg);
  CHECK(final_loss <= s.loss_history.front());
  CHECK((s.filter.times().array() >= 0.0).all());

  const TrainState again = train({{x, x}}, cfg);
  for (std::size_t i = 0; i < s.loss_history.size(); ++i)
    CHECK(std::abs(again.loss_history[i] - s.loss_history[i]) <= 1e-10);

  // Every step projects T onto T ≥ 0. t_0 sees a positive gradient, so plain
  // SGD would push it below zero.
  const auto y = bundle(testsupport::bumpy_sphere(1, 7), 12, "y");
  TrainConfig sgd = small_config();
  sgd.optimizer = Optimizer::SGD;
  sgd.learning_rate = 0.05;
  TrainState st = TrainState::initial(12, 6);
  for (int i = 0; i < 5; ++i) {
    sgd.iterations = 1;
    const double g0 = loss_and_gradient(st, {x, y}, sgd).grad_t[0];
    st = train({{x, y}}, sgd, st);
    CHECK((st.filter.times().array() >= 0.0).all());
    if (g0 > 0.0) CHECK(st.filter.times()[0] == 0.0);
  }
  CHECK(st.loss_history.size() == 5);
}

TEST_CASE("finite-difference training is bit-reproducible") {
  const auto x = bundle(testsupport::bumpy_sphere(0, 6), 8, "x");
  const auto y = bundle(testsupport::bumpy_sphere(0, 7), 8, "y");
  TrainConfig cfg;
  cfg.k_init = 4;
  cfg.k_end = 8;
  cfg.k_step = 2;
  cfg.iterations = 4;
  cfg.gradient_mode = GradientMode::FiniteDifference;
  cfg.shuffle = true;
  cfg.seed = 11;
  const TrainState a = train({{x, y}, {y, x}}, cfg);
  const TrainState b = train({{x, y}, {y, x}}, cfg);
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.filter.times() == b.filter.times());
}

TEST_CASE("zero iterations and the inhibition profile") {
  const auto x = bundle(testsupport::bumpy_sphere(1, 6), 12, "x");
  TrainConfig cfg = small_config();
  cfg.iterations = 0;
  const TrainState s = train({{x, x}}, cfg);
  CHECK(s.filter.times() == Eigen::VectorXd::Zero(12));
  CHECK(s.transform.weights == Eigen::MatrixXd::Identity(6, 6));
  CHECK(s.loss_history.empty());
  for (const auto& [i, g] : inhibition_profile(s)) CHECK(g == 1.0);

  cfg.iterations = 20;
  cfg.learning_rate = 0.1;
  const auto prof = inhibition_profile(train({{x, bundle(testsupport::bumpy_sphere(1, 8), 12, "y")}}, cfg));
  REQUIRE(prof.size() == 12);
  for (std::size_t i = 0; i < prof.size(); ++i) {
    CHECK(prof[i].first == static_cast<int>(i));
    CHECK(prof[i].second > 0.0);
    CHECK(prof[i].second <= 1.0);
  }
}

TEST_CASE("non-finite losses abort") {
  auto spec = std::make_shared<const Spectrum>(eigendecompose(build_operators(testsupport::bumpy_sphere(1, 1)), 12));
  FeatureSet f = hks(*spec, default_hks_times(*spec, 6));
  f.values(3, 2) = std::numeric_limits<double>::infinity();
  const auto bad = std::make_shared<const ShapeBundle>(ShapeBundle{"bad", spec, f});
  const TrainConfig cfg = small_config();
  CHECK_THROWS_AS(loss_and_gradient(TrainState::initial(12, 6), {bad, bad}, cfg), NonFiniteLossError);
  CHECK_THROWS_AS(train({{bad, bad}}, cfg), NonFiniteLossError);
  CHECK_THROWS_AS(train({}, cfg), InvalidRangeError);
}
