// afmap: precompute spectra, train inhibition filters, match shapes, evaluate.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "afmap/cli.hpp"
#include "afmap/error.hpp"

namespace cli = afmap::cli;

int main(int argc, char** argv) {
  CLI::App app{"Functional-map shape matching with learnable inhibited Laplacian bases"};
  app.require_subcommand(0, 1);

  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::string variant, route;
  bool dump_config = false;
  app.add_option("--config", config_file, "project config (JSON)");
  app.add_option("--seed", seed, "override train.seed");
  app.add_option("--variant", variant, "fixed | learned")->check(CLI::IsMember({"fixed", "learned"}));
  app.add_option("--route", route, "solver | projection")->check(CLI::IsMember({"solver", "projection"}));
  app.add_flag("--dump-config", dump_config, "print the effective config and exit");

  auto* precompute = app.add_subcommand("precompute", "cache spectra for every mesh in the config");
  auto* train = app.add_subcommand("train", "learn the inhibition filter and feature transform");

  cli::MatchRequest req;
  std::string map_file, gt_file;
  auto add_pair = [&](CLI::App* sub) {
    sub->add_option("x", req.x, "source mesh (name or index)")->required();
    sub->add_option("y", req.y, "target mesh (name or index)")->required();
    sub->add_flag("--one-based", req.one_based, "1-based correspondence files");
  };
  auto* match = app.add_subcommand("match", "compute a correspondence y -> x");
  add_pair(match);
  match->add_flag("--refine", req.refine, "add a G-ZoomOut stage");
  match->add_option("--gt", gt_file, "ground-truth correspondence for the report");

  auto* refine = app.add_subcommand("refine", "G-ZoomOut on an existing correspondence");
  add_pair(refine);
  refine->add_option("--map", map_file, "correspondence file")->required();

  auto* eval = app.add_subcommand("eval", "geodesic error of a correspondence");
  add_pair(eval);
  eval->add_option("--map", map_file, "predicted correspondence")->required();
  eval->add_option("--gt", gt_file, "ground-truth correspondence")->required();

  auto* plots = app.add_subcommand("export-plots", "write profile, loss and PCK CSVs");

  cli::SynthRequest synth_req;
  std::string kind = "noisy";
  std::vector<double> factors{1.0, 1.0, 2.0};
  bool keep_order = false;
  std::string base, out_dir = ".";
  auto* synth = app.add_subcommand("synth", "generate a synthetic pair with ground truth");
  synth->add_option("base", base, "base mesh")->required()->check(CLI::ExistingFile);
  synth->add_option("--kind", kind, "permutation | noisy | scale")
      ->check(CLI::IsMember({"permutation", "noisy", "scale"}));
  synth->add_option("--sigma", synth_req.deformation.sigma, "noise, fraction of bbox diagonal");
  synth->add_option("--factors", factors, "axis scale factors")->expected(3);
  synth->add_flag("--keep-order", keep_order, "identity vertex order");
  synth->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  return cli::guarded(
      [&] {
        if (*synth) {
          using Kind = afmap::Deformation::Kind;
          synth_req.base = base;
          synth_req.out_dir = out_dir;
          synth_req.seed = seed.value_or(0);
          synth_req.deformation.kind = kind == "permutation" ? Kind::Permutation
                                       : kind == "noisy"     ? Kind::NoisyPermutation
                                                             : Kind::NonIsometricScale;
          synth_req.deformation.factors = Eigen::Vector3d(factors[0], factors[1], factors[2]);
          synth_req.deformation.permute = !keep_order;
          cli::cmd_synth(synth_req, std::cout);
          return;
        }

        cli::ProjectConfig config;
        if (!config_file.empty()) config = cli::load_config(config_file);
        if (seed) config.pipeline.train.seed = *seed;
        if (!variant.empty()) {
          config.variant.basis = variant == "fixed" ? afmap::BasisVariant::Fixed : afmap::BasisVariant::Learned;
        }
        if (!route.empty()) {
          config.variant.route = route == "solver" ? afmap::FmapRoute::Solver : afmap::FmapRoute::Projection;
        }
        if (dump_config) {
          std::cout << cli::config_to_json(config).dump(2) << "\n";
          return;
        }
        config.validate();
        if (!gt_file.empty()) req.ground_truth = gt_file;

        if (*precompute) {
          const auto s = cli::cmd_precompute(config, std::cout);
          std::cout << s.computed << " computed, " << s.reused << " reused\n";
        } else if (*train) {
          cli::cmd_train(config, std::cout);
        } else if (*match) {
          cli::cmd_match(config, req, std::cout);
        } else if (*refine) {
          cli::cmd_refine(config, req, map_file, std::cout);
        } else if (*eval) {
          cli::cmd_eval(config, req, map_file, std::cout);
        } else if (*plots) {
          cli::cmd_export_plots(config, std::cout);
        } else {
          std::cout << app.help();
        }
      },
      std::cerr);
}
