// Runs the near-isometric benchmark and prints (or stores) the reference
// error. The finite-difference run fixes the golden threshold the acceptance
// suite checks the analytic path against.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "afmap/bench.hpp"
#include "afmap/serialize.hpp"

int main(int argc, char** argv) {
  CLI::App app{"near-isometric reference run"};
  std::string mode = "fd", variant = "learned", descriptors, out;
  int iterations = -1;
  double lr = -1.0;
  std::uint64_t seed = 7;
  app.add_option("--mode", mode)->check(CLI::IsMember({"fd", "analytic"}));
  app.add_option("--variant", variant)->check(CLI::IsMember({"fixed", "learned"}));
  app.add_option("--descriptors", descriptors);
  app.add_option("--iterations", iterations);
  app.add_option("--lr", lr);
  app.add_option("--seed", seed, "synthetic pair seed");
  app.add_option("--out", out, "write the result as JSON");
  CLI11_PARSE(app, argc, argv);

  afmap::PipelineOptions opts = afmap::near_isometric_options();
  opts.train.gradient_mode =
      mode == "fd" ? afmap::GradientMode::FiniteDifference : afmap::GradientMode::Analytic;
  if (!descriptors.empty()) opts.descriptors = afmap::descriptor_kind_from_string(descriptors);
  if (iterations >= 0) opts.train.iterations = iterations;
  if (lr > 0.0) opts.train.learning_rate = lr;
  afmap::Variant v;
  v.basis = variant == "fixed" ? afmap::BasisVariant::Fixed : afmap::BasisVariant::Learned;

  const auto t0 = std::chrono::steady_clock::now();
  const afmap::SyntheticPair pair = afmap::near_isometric_pair(seed);
  const afmap::PipelineResult res = afmap::run_pipeline(pair, v, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const Eigen::VectorXd g = res.state.filter.gains();
  const int q = static_cast<int>(g.size()) / 4;
  nlohmann::json j;
  j["mode"] = mode;
  j["variant"] = v.name();
  j["descriptors"] = afmap::to_string(opts.descriptors);
  j["iterations"] = opts.train.iterations;
  j["learning_rate"] = opts.train.learning_rate;
  j["seed"] = seed;
  j["mean_error"] = res.report.mean_error;
  j["initial_loss"] = res.state.loss_history.empty() ? 0.0 : res.state.loss_history.front();
  j["final_loss"] = res.state.loss_history.empty() ? 0.0 : res.state.loss_history.back();
  j["gain_bottom_quartile"] = g.head(q).mean();
  j["gain_top_quartile"] = g.tail(q).mean();
  j["gains"] = std::vector<double>(g.data(), g.data() + g.size());
  j["seconds"] = secs;
  std::cout << j.dump(2) << "\n";
  if (!out.empty()) afmap::write_text(out, j.dump(2) + "\n");
  return 0;
}
