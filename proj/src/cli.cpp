#include "afmap/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <set>
#include <sstream>

#include "afmap/error.hpp"
#include "afmap/serialize.hpp"

namespace afmap::cli {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ParseError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read_key(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + "." + key + ": wrong type");
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

fs::path resolve(const ProjectConfig& c, const fs::path& p) { return p.is_absolute() ? p : c.base_dir / p; }
fs::path workspace(const ProjectConfig& c) { return resolve(c, c.workspace); }
fs::path output_dir(const ProjectConfig& c) { return resolve(c, c.output); }
fs::path filter_path(const ProjectConfig& c) { return workspace(c) / "train" / "filter.json"; }
fs::path loss_path(const ProjectConfig& c) { return workspace(c) / "train" / "loss.csv"; }

std::string mesh_name(const fs::path& p) { return p.stem().string(); }

TriMesh load_project_mesh(const ProjectConfig& c, const fs::path& p) {
  TriMesh m = load_mesh(resolve(c, p));
  return c.pipeline.normalize ? normalize_area(m) : m;
}

struct LoadedShape {
  std::string name;
  TriMesh mesh;
  std::shared_ptr<const Spectrum> spectrum;
};

LoadedShape load_cached(const ProjectConfig& c, int index) {
  const fs::path& p = c.meshes.at(static_cast<std::size_t>(index));
  LoadedShape s{mesh_name(p), load_project_mesh(c, p), nullptr};
  const fs::path cache = cache_path(c, p, s.mesh.content_hash());
  if (!fs::exists(cache)) {
    throw InvalidRangeError("missing cache for mesh '" + s.name + "' (" + cache.string() + "); run precompute");
  }
  auto spec = std::make_shared<const Spectrum>(read_spectrum(cache));
  if (spec->vertex_count() != s.mesh.vertex_count() || spec->k() != c.k) {
    throw ParseError("cache for mesh '" + s.name + "' does not match the mesh or k");
  }
  s.spectrum = std::move(spec);
  return s;
}

int find_mesh(const ProjectConfig& c, const std::string& key) {
  for (std::size_t i = 0; i < c.meshes.size(); ++i) {
    if (mesh_name(c.meshes[i]) == key) return static_cast<int>(i);
  }
  try {
    std::size_t used = 0;
    const int idx = std::stoi(key, &used);
    if (used == key.size() && idx >= 0 && idx < static_cast<int>(c.meshes.size())) return idx;
  } catch (const std::logic_error&) {
  }
  throw InvalidRangeError("mesh '" + key + "' is not in the config mesh list");
}

TrainState load_state_or_identity(const ProjectConfig& c, int d) {
  if (fs::exists(filter_path(c))) {
    TrainState s;
    try {
      s = state_from_json(json::parse(read_text(filter_path(c))));
    } catch (const json::exception& e) {
      throw ParseError(filter_path(c).string() + ": " + e.what());
    }
    if (s.filter.k() != c.k || s.transform.weights.rows() != d) {
      throw DimensionMismatchError("trained filter does not match k or descriptor dimension");
    }
    return s;
  }
  return TrainState::initial(c.k, d);
}

std::string pair_stem(const LoadedShape& x, const LoadedShape& y) { return x.name + "__" + y.name; }

std::string to_string(Optimizer o) { return o == Optimizer::Adam ? "adam" : "sgd"; }
std::string to_string(GradientMode m) {
  return m == GradientMode::Analytic ? "analytic" : "finite_difference";
}

}  // namespace

void ProjectConfig::validate() const {
  if (k < 2) throw InvalidRangeError("k must be >= 2");
  pipeline.train.validate();
  if (pipeline.train.k_end > k) throw InvalidRangeError("train.k_end exceeds k");
  if (pipeline.fmap_k < 1 || pipeline.fmap_k > k) throw InvalidRangeError("fmap_k outside [1, k]");
  truncation_schedule(pipeline.zoom_k_init, pipeline.zoom_k_end, pipeline.zoom_step);
  if (pipeline.zoom_k_end > k) throw InvalidRangeError("refine.k_end exceeds k");
  if (!(pipeline.lambda_reg >= 0.0)) throw InvalidRangeError("lambda_reg must be >= 0");
  for (const auto& [a, b] : pairs) {
    const int n = static_cast<int>(meshes.size());
    if (a < 0 || b < 0 || a >= n || b >= n) throw InvalidRangeError("pair index outside the mesh list");
  }
}

ProjectConfig config_from_json(const json& j, const fs::path& base_dir) {
  reject_unknown(j,
                 {"workspace", "meshes", "k", "pairs", "variant", "route", "output", "descriptors",
                  "descriptor_count", "fmap_k", "lambda_reg", "refine", "train", "normalize"},
                 "config");
  ProjectConfig c;
  c.base_dir = base_dir;
  std::string s;
  std::string ws = c.workspace.string(), out = c.output.string();
  read_key(j, "workspace", ws, "config");
  read_key(j, "output", out, "config");
  c.workspace = ws;
  c.output = out;
  std::vector<std::string> meshes;
  read_key(j, "meshes", meshes, "config");
  for (const auto& m : meshes) c.meshes.emplace_back(m);
  read_key(j, "k", c.k, "config");
  read_key(j, "pairs", c.pairs, "config");
  if (j.contains("variant")) {
    read_key(j, "variant", s, "config");
    if (s != "fixed" && s != "learned") throw ParseError("config.variant must be fixed or learned");
    c.variant.basis = s == "fixed" ? BasisVariant::Fixed : BasisVariant::Learned;
  }
  if (j.contains("route")) {
    read_key(j, "route", s, "config");
    if (s != "solver" && s != "projection") throw ParseError("config.route must be solver or projection");
    c.variant.route = s == "solver" ? FmapRoute::Solver : FmapRoute::Projection;
  }
  PipelineOptions& p = c.pipeline;
  p.k = c.k;
  if (j.contains("descriptors")) {
    read_key(j, "descriptors", s, "config");
    try {
      p.descriptors = descriptor_kind_from_string(s);
    } catch (const InvalidRangeError& e) {
      throw ParseError(std::string("config.descriptors: ") + e.what());
    }
  }
  read_key(j, "descriptor_count", p.descriptor_count, "config");
  read_key(j, "normalize", p.normalize, "config");
  read_key(j, "fmap_k", p.fmap_k, "config");
  read_key(j, "lambda_reg", p.lambda_reg, "config");
  if (j.contains("refine")) {
    const json& r = j.at("refine");
    reject_unknown(r, {"enabled", "k_init", "k_end", "step"}, "config.refine");
    read_key(r, "enabled", p.refine, "config.refine");
    read_key(r, "k_init", p.zoom_k_init, "config.refine");
    read_key(r, "k_end", p.zoom_k_end, "config.refine");
    read_key(r, "step", p.zoom_step, "config.refine");
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown(t,
                   {"learning_rate", "iterations", "alpha", "k_init", "k_end", "k_step", "seed", "optimizer",
                    "beta1", "beta2", "epsilon", "gradient_mode", "fd_step", "bidirectional", "shuffle"},
                   "config.train");
    TrainConfig& tc = p.train;
    read_key(t, "learning_rate", tc.learning_rate, "config.train");
    read_key(t, "iterations", tc.iterations, "config.train");
    read_key(t, "alpha", tc.alpha, "config.train");
    read_key(t, "k_init", tc.k_init, "config.train");
    read_key(t, "k_end", tc.k_end, "config.train");
    read_key(t, "k_step", tc.k_step, "config.train");
    read_key(t, "seed", tc.seed, "config.train");
    read_key(t, "beta1", tc.beta1, "config.train");
    read_key(t, "beta2", tc.beta2, "config.train");
    read_key(t, "epsilon", tc.epsilon, "config.train");
    read_key(t, "fd_step", tc.fd_step, "config.train");
    read_key(t, "bidirectional", tc.bidirectional, "config.train");
    read_key(t, "shuffle", tc.shuffle, "config.train");
    if (t.contains("optimizer")) {
      read_key(t, "optimizer", s, "config.train");
      if (s != "adam" && s != "sgd") throw ParseError("config.train.optimizer must be adam or sgd");
      tc.optimizer = s == "adam" ? Optimizer::Adam : Optimizer::SGD;
    }
    if (t.contains("gradient_mode")) {
      read_key(t, "gradient_mode", s, "config.train");
      if (s != "analytic" && s != "finite_difference") {
        throw ParseError("config.train.gradient_mode must be analytic or finite_difference");
      }
      tc.gradient_mode = s == "analytic" ? GradientMode::Analytic : GradientMode::FiniteDifference;
    }
  }
  return c;
}

json config_to_json(const ProjectConfig& c) {
  const PipelineOptions& p = c.pipeline;
  const TrainConfig& t = p.train;
  std::vector<std::string> meshes;
  for (const auto& m : c.meshes) meshes.push_back(m.string());
  return {
      {"workspace", c.workspace.string()},
      {"meshes", meshes},
      {"k", c.k},
      {"pairs", c.pairs},
      {"variant", c.variant.basis == BasisVariant::Fixed ? "fixed" : "learned"},
      {"route", c.variant.route == FmapRoute::Solver ? "solver" : "projection"},
      {"output", c.output.string()},
      {"descriptors", afmap::to_string(p.descriptors)},
      {"descriptor_count", p.descriptor_count},
      {"normalize", p.normalize},
      {"fmap_k", p.fmap_k},
      {"lambda_reg", p.lambda_reg},
      {"refine", {{"enabled", p.refine}, {"k_init", p.zoom_k_init}, {"k_end", p.zoom_k_end}, {"step", p.zoom_step}}},
      {"train",
       {{"learning_rate", t.learning_rate},
        {"iterations", t.iterations},
        {"alpha", t.alpha},
        {"k_init", t.k_init},
        {"k_end", t.k_end},
        {"k_step", t.k_step},
        {"seed", t.seed},
        {"optimizer", to_string(t.optimizer)},
        {"beta1", t.beta1},
        {"beta2", t.beta2},
        {"epsilon", t.epsilon},
        {"gradient_mode", to_string(t.gradient_mode)},
        {"fd_step", t.fd_step},
        {"bidirectional", t.bidirectional},
        {"shuffle", t.shuffle}}},
  };
}

ProjectConfig load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  ProjectConfig c = config_from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
  c.validate();
  return c;
}

int exit_code_for(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  if (const auto* nf = dynamic_cast<const NonFiniteLossError*>(&e); nf && nf->iteration() >= 0) {
    err << "iteration: " << nf->iteration() << "\n";
  }
  if (dynamic_cast<const NumericalError*>(&e)) return 2;
  return 1;
}

int guarded(const std::function<void()>& fn, std::ostream& err) {
  try {
    fn();
    return 0;
  } catch (const std::exception& e) {
    return exit_code_for(e, err);
  }
}

fs::path cache_path(const ProjectConfig& c, const fs::path& mesh_path, std::uint64_t mesh_hash) {
  return workspace(c) / "cache" / (mesh_name(mesh_path) + "-" + hex64(mesh_hash) + "-k" + std::to_string(c.k) + ".spec");
}

PrecomputeSummary cmd_precompute(const ProjectConfig& c, std::ostream& log) {
  PrecomputeSummary out;
  int failures = 0;
  bool numerical = false;
  for (const fs::path& p : c.meshes) {
    try {
      const TriMesh mesh = load_project_mesh(c, p);
      const fs::path cache = cache_path(c, p, mesh.content_hash());
      if (fs::exists(cache)) {
        ++out.reused;
        log << "cached   " << mesh_name(p) << "\n";
        continue;
      }
      write_spectrum(*compute_spectrum(mesh, c.k), cache);
      ++out.computed;
      log << "computed " << mesh_name(p) << " -> " << cache.string() << "\n";
    } catch (const Error& e) {
      ++failures;
      numerical = numerical || dynamic_cast<const NumericalError*>(&e) != nullptr;
      log << "failed   " << mesh_name(p) << ": " << e.what() << "\n";
    }
  }
  if (failures > 0) {
    const std::string msg = std::to_string(failures) + " mesh(es) failed to precompute";
    if (numerical) throw NumericalError(msg);
    throw Error(msg);
  }
  return out;
}

TrainState cmd_train(const ProjectConfig& c, std::ostream& log) {
  c.validate();
  std::vector<std::pair<int, int>> pairs = c.pairs;
  if (pairs.empty()) {
    for (int i = 0; i < static_cast<int>(c.meshes.size()); ++i) {
      for (int j = i + 1; j < static_cast<int>(c.meshes.size()); ++j) pairs.emplace_back(i, j);
    }
  }
  if (pairs.empty()) throw InvalidRangeError("training needs at least one mesh pair");

  std::vector<std::shared_ptr<const ShapeBundle>> bundles(c.meshes.size());
  auto bundle = [&](int i) {
    auto& b = bundles[static_cast<std::size_t>(i)];
    if (!b) {
      LoadedShape s = load_cached(c, i);
      FeatureSet f = compute_descriptors(s.mesh, *s.spectrum, c.pipeline.descriptors, c.pipeline.descriptor_count);
      b = std::make_shared<const ShapeBundle>(ShapeBundle{s.name, s.spectrum, std::move(f)});
    }
    return b;
  };
  std::vector<ShapePair> train_pairs;
  for (const auto& [a, b] : pairs) train_pairs.push_back({bundle(a), bundle(b)});

  TrainConfig cfg = c.pipeline.train;
  if (c.variant.basis == BasisVariant::Fixed) cfg.learn_basis = false;
  const int d = train_pairs.front().x->features.dim();
  TrainState state = train(train_pairs, cfg, TrainState::initial(c.k, d));

  write_text(filter_path(c), state_to_json(state).dump(2) + "\n");
  write_text(loss_path(c), loss_csv(state.loss_history));
  log << "trained " << state.iteration << " iterations";
  if (!state.loss_history.empty()) log << ", final loss " << state.loss_history.back();
  log << "\n";
  return state;
}

PipelineResult cmd_match(const ProjectConfig& c, const MatchRequest& r, std::ostream& log) {
  c.validate();
  const LoadedShape x = load_cached(c, find_mesh(c, r.x));
  const LoadedShape y = load_cached(c, find_mesh(c, r.y));
  const PipelineOptions& opts = c.pipeline;
  FeatureSet fx = compute_descriptors(x.mesh, *x.spectrum, opts.descriptors, opts.descriptor_count);
  FeatureSet fy = compute_descriptors(y.mesh, *y.spectrum, opts.descriptors, opts.descriptor_count);
  const TrainState state = load_state_or_identity(c, fx.dim());

  std::optional<PointwiseMap> gt;
  if (r.ground_truth) gt = read_correspondence(*r.ground_truth, x.mesh.vertex_count(), r.one_based);

  PipelineOptions run_opts = opts;
  run_opts.refine = opts.refine || r.refine;
  PipelineResult res = run_pipeline(PipelineShape{x.mesh, x.spectrum, std::move(fx)},
                                    PipelineShape{y.mesh, y.spectrum, std::move(fy)}, gt ? &*gt : nullptr,
                                    c.variant, run_opts, state);

  const fs::path out = output_dir(c);
  write_correspondence(res.map, out / (pair_stem(x, y) + ".map"), r.one_based);
  write_text(out / (pair_stem(x, y) + ".report.json"), report_to_json(res.report).dump(2) + "\n");
  log << "matched " << y.name << " -> " << x.name;
  if (gt) log << ", mean geodesic error " << res.report.mean_error;
  log << "\n";
  return res;
}

PointwiseMap cmd_refine(const ProjectConfig& c, const MatchRequest& r, const fs::path& map_file, std::ostream& log) {
  c.validate();
  const LoadedShape x = load_cached(c, find_mesh(c, r.x));
  const LoadedShape y = load_cached(c, find_mesh(c, r.y));
  const PointwiseMap init = read_correspondence(map_file, x.mesh.vertex_count(), r.one_based);
  if (init.target_count() != y.mesh.vertex_count()) {
    throw DimensionMismatchError(map_file.string() + " has " + std::to_string(init.target_count()) +
                                 " entries, mesh '" + y.name + "' has " + std::to_string(y.mesh.vertex_count()) +
                                 " vertices");
  }
  InhibitionFilter filter(c.k);
  if (c.variant.basis == BasisVariant::Learned && fs::exists(filter_path(c))) {
    filter = state_from_json(json::parse(read_text(filter_path(c)))).filter;
  }
  const auto [bx, by] = shared_filter_pair(x.spectrum, y.spectrum, filter);
  const auto& p = c.pipeline;
  ZoomOutResult z = g_zoomout(init, bx, by, p.zoom_k_init, p.zoom_k_end, p.zoom_step);
  write_correspondence(z.map, output_dir(c) / (pair_stem(x, y) + ".refined.map"), r.one_based);
  log << "refined over " << z.orders.size() << " orders, final energy "
      << (z.energy_trace.empty() ? 0.0 : z.energy_trace.back()) << "\n";
  return z.map;
}

EvalReport cmd_eval(const ProjectConfig& c, const MatchRequest& r, const fs::path& map_file, std::ostream& log) {
  if (!r.ground_truth) throw InvalidRangeError("eval needs a ground-truth correspondence file");
  const int xi = find_mesh(c, r.x);
  const TriMesh x = load_project_mesh(c, c.meshes[static_cast<std::size_t>(xi)]);
  const PointwiseMap pred = read_correspondence(map_file, x.vertex_count(), r.one_based);
  const PointwiseMap gt = read_correspondence(*r.ground_truth, x.vertex_count(), r.one_based);
  EvalReport rep = geodesic_error(pred, gt, x);
  write_text(output_dir(c) / (map_file.stem().string() + ".eval.json"), report_to_json(rep).dump(2) + "\n");
  log << "mean geodesic error " << rep.mean_error << "\n";
  return rep;
}

std::vector<fs::path> cmd_export_plots(const ProjectConfig& c, std::ostream& log) {
  if (!fs::exists(workspace(c))) {
    throw InvalidRangeError("missing artifacts: workspace " + workspace(c).string() + " (run precompute)");
  }
  const fs::path dir = workspace(c) / "plots";
  std::vector<fs::path> written;

  TrainState state = TrainState::initial(c.k, 1);
  if (fs::exists(filter_path(c))) state = state_from_json(json::parse(read_text(filter_path(c))));
  write_text(dir / "profile.csv", profile_csv(inhibition_profile(state)));
  written.push_back(dir / "profile.csv");

  std::vector<double> history;
  if (fs::exists(loss_path(c))) {
    std::istringstream in(read_text(loss_path(c)));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw ParseError(loss_path(c).string() + ": malformed row");
      history.push_back(std::stod(line.substr(comma + 1)));
    }
  }
  write_text(dir / "loss.csv", loss_csv(history));
  written.push_back(dir / "loss.csv");

  std::string pck = "pair,threshold,pck\n";
  std::vector<fs::path> reports;
  if (fs::exists(output_dir(c))) {
    for (const auto& e : fs::directory_iterator(output_dir(c))) {
      const std::string n = e.path().filename().string();
      if (n.size() > 12 && n.substr(n.size() - 12) == ".report.json") reports.push_back(e.path());
    }
  }
  std::sort(reports.begin(), reports.end());
  for (const auto& p : reports) {
    const json j = json::parse(read_text(p));
    const auto th = j.at("pck").at("thresholds").get<std::vector<double>>();
    const auto val = j.at("pck").at("values").get<std::vector<double>>();
    const std::string pair = p.filename().string().substr(0, p.filename().string().size() - 12);
    for (std::size_t i = 0; i < th.size() && i < val.size(); ++i) {
      char buf[96];
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", th[i], val[i]);
      pck += pair + buf;
    }
  }
  write_text(dir / "pck.csv", pck);
  written.push_back(dir / "pck.csv");
  if (reports.empty()) log << "note: no match reports found; pck.csv has only a header\n";
  for (const auto& p : written) log << "wrote " << p.string() << "\n";
  return written;
}

SyntheticPair cmd_synth(const SynthRequest& r, std::ostream& log) {
  SyntheticPair pair = make_synthetic_pair(load_mesh(r.base), r.deformation, r.seed);
  fs::create_directories(r.out_dir);
  write_off(pair.x, r.out_dir / "x.off");
  write_off(pair.y, r.out_dir / "y.off");
  write_correspondence(pair.gt, r.out_dir / "gt.map");
  log << "wrote " << (r.out_dir / "x.off").string() << ", y.off, gt.map\n";
  return pair;
}

}  // namespace afmap::cli
