#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "afmap/error.hpp"
#include "afmap/mesh.hpp"

namespace afmap {

namespace {

// Splits a polygon into a triangle fan.
void append_polygon(const std::vector<int>& poly, std::vector<Face>& faces) {
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
    faces.push_back({poly[0], poly[i], poly[i + 1]});
  }
}

// Next non-empty, non-comment line.
bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r\n") != std::string::npos) return true;
  }
  return false;
}

TriMesh read_off(std::istream& in) {
  std::string line;
  if (!next_content_line(in, line)) throw ParseError("OFF: empty file");
  std::istringstream header(line);
  std::string magic;
  header >> magic;
  if (magic != "OFF") throw ParseError("OFF: missing OFF header");
  long nv = -1, nf = -1, ne = 0;
  if (!(header >> nv >> nf)) {
    if (!next_content_line(in, line)) throw ParseError("OFF: missing element counts");
    std::istringstream counts(line);
    if (!(counts >> nv >> nf)) throw ParseError("OFF: malformed element counts");
    counts >> ne;
  }
  if (nv <= 0 || nf < 0) throw ParseError("OFF: invalid element counts");

  std::vector<Vec3> vertices(nv);
  for (long i = 0; i < nv; ++i) {
    if (!next_content_line(in, line)) throw ParseError("OFF: truncated vertex list");
    std::istringstream ls(line);
    if (!(ls >> vertices[i].x() >> vertices[i].y() >> vertices[i].z())) {
      throw ParseError("OFF: malformed vertex " + std::to_string(i));
    }
  }
  std::vector<Face> faces;
  faces.reserve(nf);
  for (long f = 0; f < nf; ++f) {
    if (!next_content_line(in, line)) throw ParseError("OFF: truncated face list");
    std::istringstream ls(line);
    int count = 0;
    if (!(ls >> count) || count < 3) throw ParseError("OFF: malformed face " + std::to_string(f));
    std::vector<int> poly(count);
    for (int& idx : poly) {
      if (!(ls >> idx)) throw ParseError("OFF: malformed face " + std::to_string(f));
      if (idx < 0 || idx >= nv) {
        throw ParseError("OFF: face " + std::to_string(f) + " index " + std::to_string(idx) +
                         " out of range");
      }
    }
    append_polygon(poly, faces);
  }
  return TriMesh(std::move(vertices), std::move(faces));
}

TriMesh read_obj(std::istream& in) {
  std::vector<Vec3> vertices;
  std::vector<std::vector<int>> polys;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) {
        throw ParseError("OBJ: malformed vertex on line " + std::to_string(line_no));
      }
      vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string tok;
      while (ls >> tok) {
        // v, v/vt, v//vn, v/vt/vn
        const std::string head = tok.substr(0, tok.find('/'));
        int idx = 0;
        try {
          std::size_t used = 0;
          idx = std::stoi(head, &used);
          if (used != head.size()) throw std::invalid_argument(head);
        } catch (const std::exception&) {
          throw ParseError("OBJ: malformed face index '" + tok + "' on line " +
                           std::to_string(line_no));
        }
        const int n = static_cast<int>(vertices.size());
        if (idx < 0) idx = n + idx + 1;
        if (idx < 1 || idx > n) {
          throw ParseError("OBJ: face index out of range on line " + std::to_string(line_no));
        }
        poly.push_back(idx - 1);
      }
      if (poly.size() < 3) throw ParseError("OBJ: face with fewer than 3 vertices");
      polys.push_back(std::move(poly));
    }
  }
  std::vector<Face> faces;
  for (const auto& p : polys) append_polygon(p, faces);
  return TriMesh(std::move(vertices), std::move(faces));
}

// ---- PLY ----

enum class PlyType { I8, U8, I16, U16, I32, U32, F32, F64 };

PlyType parse_ply_type(const std::string& s) {
  if (s == "char" || s == "int8") return PlyType::I8;
  if (s == "uchar" || s == "uint8") return PlyType::U8;
  if (s == "short" || s == "int16") return PlyType::I16;
  if (s == "ushort" || s == "uint16") return PlyType::U16;
  if (s == "int" || s == "int32") return PlyType::I32;
  if (s == "uint" || s == "uint32") return PlyType::U32;
  if (s == "float" || s == "float32") return PlyType::F32;
  if (s == "double" || s == "float64") return PlyType::F64;
  throw ParseError("PLY: unknown property type '" + s + "'");
}

struct PlyProperty {
  std::string name;
  PlyType type{};
  bool is_list = false;
  PlyType count_type{};
};

struct PlyElement {
  std::string name;
  long count = 0;
  std::vector<PlyProperty> props;
};

template <typename T>
T read_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw ParseError("PLY: truncated data");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

double read_binary_scalar(std::istream& in, PlyType t) {
  switch (t) {
    case PlyType::I8: return read_le<std::int8_t>(in);
    case PlyType::U8: return read_le<std::uint8_t>(in);
    case PlyType::I16: return read_le<std::int16_t>(in);
    case PlyType::U16: return read_le<std::uint16_t>(in);
    case PlyType::I32: return read_le<std::int32_t>(in);
    case PlyType::U32: return read_le<std::uint32_t>(in);
    case PlyType::F32: return read_le<float>(in);
    case PlyType::F64: return read_le<double>(in);
  }
  return 0.0;
}

double read_ascii_scalar(std::istream& in) {
  double v;
  if (!(in >> v)) throw ParseError("PLY: truncated ascii data");
  return v;
}

TriMesh read_ply(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply") throw ParseError("PLY: missing magic");
  bool binary = false;
  std::vector<PlyElement> elements;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "binary_little_endian") binary = true;
      else if (fmt == "ascii") binary = false;
      else throw ParseError("PLY: unsupported format '" + fmt + "'");
    } else if (tag == "element") {
      PlyElement e;
      if (!(ls >> e.name >> e.count) || e.count < 0) throw ParseError("PLY: malformed element");
      elements.push_back(e);
    } else if (tag == "property") {
      if (elements.empty()) throw ParseError("PLY: property before element");
      PlyProperty p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string ct, it;
        ls >> ct >> it >> p.name;
        p.is_list = true;
        p.count_type = parse_ply_type(ct);
        p.type = parse_ply_type(it);
      } else {
        p.type = parse_ply_type(type);
        ls >> p.name;
      }
      elements.back().props.push_back(p);
    } else if (tag == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) throw ParseError("PLY: missing end_header");

  auto scalar = [&](PlyType t) { return binary ? read_binary_scalar(in, t) : read_ascii_scalar(in); };

  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  bool saw_vertices = false;
  for (const auto& e : elements) {
    int xi = -1, yi = -1, zi = -1, li = -1;
    for (int i = 0; i < static_cast<int>(e.props.size()); ++i) {
      const auto& n = e.props[i].name;
      if (n == "x") xi = i;
      if (n == "y") yi = i;
      if (n == "z") zi = i;
      if (e.props[i].is_list && (n == "vertex_indices" || n == "vertex_index")) li = i;
    }
    const bool is_vertex = e.name == "vertex";
    const bool is_face = e.name == "face";
    if (is_vertex) {
      if (xi < 0 || yi < 0 || zi < 0) throw ParseError("PLY: vertex element lacks x/y/z");
      saw_vertices = true;
    }
    if (is_face && li < 0) throw ParseError("PLY: face element lacks vertex_indices");
    for (long r = 0; r < e.count; ++r) {
      Vec3 p = Vec3::Zero();
      std::vector<int> poly;
      for (int i = 0; i < static_cast<int>(e.props.size()); ++i) {
        const auto& prop = e.props[i];
        if (prop.is_list) {
          const double cnt = scalar(prop.count_type);
          if (cnt < 0) throw ParseError("PLY: negative list length");
          for (long c = 0; c < static_cast<long>(cnt); ++c) {
            const double v = scalar(prop.type);
            if (i == li) poly.push_back(static_cast<int>(v));
          }
        } else {
          const double v = scalar(prop.type);
          if (i == xi) p.x() = v;
          if (i == yi) p.y() = v;
          if (i == zi) p.z() = v;
        }
      }
      if (is_vertex) vertices.push_back(p);
      if (is_face) {
        if (poly.size() < 3) throw ParseError("PLY: face with fewer than 3 vertices");
        for (int idx : poly) {
          if (idx < 0 || (saw_vertices && idx >= static_cast<int>(vertices.size()))) {
            throw ParseError("PLY: face index out of range");
          }
        }
        append_polygon(poly, faces);
      }
    }
  }
  return TriMesh(std::move(vertices), std::move(faces));
}

}  // namespace

TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open mesh file " + path.string());
  try {
    switch (format) {
      case MeshFormat::OFF: return read_off(in);
      case MeshFormat::OBJ: return read_obj(in);
      case MeshFormat::PLY: return read_ply(in);
    }
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  throw ParseError("unknown mesh format");
}

TriMesh load_mesh(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".off") return load_mesh(path, MeshFormat::OFF);
  if (ext == ".obj") return load_mesh(path, MeshFormat::OBJ);
  if (ext == ".ply") return load_mesh(path, MeshFormat::PLY);
  throw ParseError("unrecognized mesh extension '" + ext + "' for " + path.string());
}

void write_off(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "OFF\n" << mesh.vertex_count() << ' ' << mesh.face_count() << " 0\n";
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices()) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

}  // namespace afmap
