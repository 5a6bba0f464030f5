#include "afmap/serialize.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "afmap/error.hpp"

namespace afmap {

namespace fs = std::filesystem;

namespace {

class Writer {
 public:
  explicit Writer(const char* magic) { buf_.append(magic, 5); }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  const std::string& bytes() const { return buf_; }

 private:
  // Host byte order; every supported target is little-endian.
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string bytes, const char* magic, const fs::path& path) : buf_(std::move(bytes)), path_(path) {
    if (buf_.size() < 5 || std::memcmp(buf_.data(), magic, 5) != 0) {
      throw ParseError(path_.string() + ": missing " + std::string(magic, 5) + " header");
    }
    pos_ = 5;
  }
  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  double f64() { return get<double>(); }
  void finish() const {
    if (pos_ != buf_.size()) throw ParseError(path_.string() + ": trailing bytes");
  }
  void need(std::uint64_t count, std::size_t width) const {
    if (count > (buf_.size() - pos_) / width) throw ParseError(path_.string() + ": truncated");
  }

 private:
  template <class T>
  T get() {
    if (buf_.size() - pos_ < sizeof(T)) throw ParseError(path_.string() + ": truncated");
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string buf_;
  fs::path path_;
  std::size_t pos_ = 0;
};

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ParseError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_spectrum(const Spectrum& spec, const fs::path& path) {
  Writer w("SPEC1");
  w.u64(spec.mesh_hash());
  w.u32(static_cast<std::uint32_t>(spec.k()));
  w.u32(static_cast<std::uint32_t>(spec.vertex_count()));
  w.f64(spec.tolerance());
  for (int i = 0; i < spec.k(); ++i) w.f64(spec.eigenvalues()[i]);
  for (int r = 0; r < spec.vertex_count(); ++r) {
    for (int c = 0; c < spec.k(); ++c) w.f64(spec.phi()(r, c));
  }
  for (int r = 0; r < spec.vertex_count(); ++r) w.f64(spec.mass()[r]);
  write_text(path, w.bytes());
}

Spectrum read_spectrum(const fs::path& path) {
  Reader r(read_text(path), "SPEC1", path);
  const std::uint64_t hash = r.u64();
  const std::uint32_t k = r.u32(), n = r.u32();
  const double tol = r.f64();
  r.need(static_cast<std::uint64_t>(k) * (n + 1) + n, 8);
  Eigen::VectorXd lambda(k);
  for (std::uint32_t i = 0; i < k; ++i) lambda[i] = r.f64();
  Eigen::MatrixXd phi(n, k);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < k; ++j) phi(i, j) = r.f64();
  }
  Eigen::VectorXd mass(n);
  for (std::uint32_t i = 0; i < n; ++i) mass[i] = r.f64();
  r.finish();
  return Spectrum(std::move(phi), std::move(lambda), std::move(mass), hash, tol);
}

void write_fmap(const FunctionalMap& c, const fs::path& path) {
  Writer w("FMAP1");
  w.u32(static_cast<std::uint32_t>(c.k()));
  w.u8(c.direction == MapDirection::XtoY ? 0 : 1);
  for (int i = 0; i < c.k(); ++i) {
    for (int j = 0; j < c.k(); ++j) w.f64(c.C(i, j));
  }
  write_text(path, w.bytes());
}

FunctionalMap read_fmap(const fs::path& path) {
  Reader r(read_text(path), "FMAP1", path);
  const std::uint32_t k = r.u32();
  const std::uint8_t dir = r.u8();
  if (dir > 1) throw ParseError(path.string() + ": bad direction tag");
  r.need(static_cast<std::uint64_t>(k) * k, 8);
  FunctionalMap out;
  out.C.resize(k, k);
  for (std::uint32_t i = 0; i < k; ++i) {
    for (std::uint32_t j = 0; j < k; ++j) out.C(i, j) = r.f64();
  }
  out.direction = dir == 0 ? MapDirection::XtoY : MapDirection::YtoX;
  r.finish();
  return out;
}

void write_soft_map(const PointwiseMap& pi, const fs::path& path) {
  const Eigen::MatrixXd p = pi.dense();
  Writer w("PMAP1");
  w.u32(static_cast<std::uint32_t>(p.rows()));
  w.u32(static_cast<std::uint32_t>(p.cols()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) w.f64(p(i, j));
  }
  write_text(path, w.bytes());
}

PointwiseMap read_soft_map(const fs::path& path) {
  Reader r(read_text(path), "PMAP1", path);
  const std::uint32_t rows = r.u32(), cols = r.u32();
  r.need(static_cast<std::uint64_t>(rows) * cols, 8);
  Eigen::MatrixXd p(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) p(i, j) = r.f64();
  }
  r.finish();
  return PointwiseMap::soft(std::move(p));
}

void write_correspondence(const PointwiseMap& pi, const fs::path& path, bool one_based) {
  if (!pi.is_hard()) throw InvalidRangeError("write_correspondence: map is not hard");
  std::string out;
  for (int idx : pi.indices()) {
    out += std::to_string(idx + (one_based ? 1 : 0));
    out += '\n';
  }
  write_text(path, out);
}

PointwiseMap read_correspondence(const fs::path& path, int source_count, bool one_based) {
  std::istringstream in(read_text(path));
  std::vector<int> idx;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      const int v = std::stoi(line, &used);
      if (line.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument("junk");
      idx.push_back(v - (one_based ? 1 : 0));
    } catch (const std::logic_error&) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": not an integer index");
    }
  }
  try {
    return PointwiseMap::hard(std::move(idx), source_count);
  } catch (const InvalidRangeError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

nlohmann::json state_to_json(const TrainState& state, const std::string& spectrum_hash) {
  const Eigen::VectorXd& t = state.filter.times();
  const Eigen::VectorXd g = state.filter.gains();
  const Eigen::MatrixXd& a = state.transform.weights;
  nlohmann::json j;
  j["k"] = t.size();
  j["T"] = std::vector<double>(t.data(), t.data() + t.size());
  j["gains"] = std::vector<double>(g.data(), g.data() + g.size());
  std::vector<double> data;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) data.push_back(a(r, c));
  }
  j["transform"] = {{"rows", a.rows()}, {"cols", a.cols()}, {"data", data}};
  j["iterations"] = state.iteration;
  j["spectrum_hash"] = spectrum_hash;
  return j;
}

TrainState state_from_json(const nlohmann::json& j) {
  try {
    const auto t = j.at("T").get<std::vector<double>>();
    if (j.at("k").get<std::size_t>() != t.size()) throw ParseError("filter JSON: k does not match T");
    const auto& tr = j.at("transform");
    const auto rows = tr.at("rows").get<int>(), cols = tr.at("cols").get<int>();
    const auto data = tr.at("data").get<std::vector<double>>();
    if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
      throw ParseError("filter JSON: transform size mismatch");
    }
    TrainState s = TrainState::initial(static_cast<int>(t.size()), rows, cols);
    s.filter = InhibitionFilter(Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size())));
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) s.transform.weights(r, c) = data[static_cast<std::size_t>(r) * cols + c];
    }
    s.iteration = j.value("iterations", 0L);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("filter JSON: ") + e.what());
  }
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["normalization"] = "geodesic distance on the source shape divided by sqrt(source area)";
  j["mean_error"] = report.mean_error;
  j["errors"] = std::vector<double>(report.errors.data(), report.errors.data() + report.errors.size());
  j["pck"] = {{"thresholds", report.pck_thresholds}, {"values", report.pck}};
  j["pipeline"] = {{"variant", report.variant}, {"k", report.k},           {"k_init", report.k_init},
                   {"k_end", report.k_end},     {"k_step", report.k_step}, {"alpha", report.alpha},
                   {"t_hash", report.t_hash},   {"refined", report.refined}};
  nlohmann::json timings = nlohmann::json::array();
  for (const auto& [stage, secs] : report.timings) timings.push_back({{"stage", stage}, {"seconds", secs}});
  j["timings"] = timings;
  j["total_seconds"] = report.total_seconds;
  return j;
}

std::string loss_csv(const std::vector<double>& history) {
  std::string out = "iteration,loss\n";
  for (std::size_t i = 0; i < history.size(); ++i) out += std::to_string(i) + "," + fmt_double(history[i]) + "\n";
  return out;
}

std::string profile_csv(const std::vector<std::pair<int, double>>& profile) {
  std::string out = "index,gain\n";
  for (const auto& [i, g] : profile) out += std::to_string(i) + "," + fmt_double(g) + "\n";
  return out;
}

std::string pck_csv(const EvalReport& report) {
  std::string out = "threshold,pck\n";
  for (std::size_t i = 0; i < report.pck.size(); ++i) {
    out += fmt_double(report.pck_thresholds[i]) + "," + fmt_double(report.pck[i]) + "\n";
  }
  return out;
}

}  // namespace afmap
