#include "cpf/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace cpf {

void validate_mesh(const Mesh& m) {
  const int n = static_cast<int>(m.vertices.size());
  for (const auto& f : m.faces) {
    for (int idx : f) {
      if (idx < 0 || idx >= n) {
        throw MeshError("face index out of range: " + std::to_string(idx));
      }
    }
  }
  if (!m.vertex_normals.empty()) {
    if (m.vertex_normals.size() != m.vertices.size()) {
      throw MeshError("normal count does not match vertex count");
    }
    for (const auto& nrm : m.vertex_normals) {
      if (std::abs(nrm.norm() - 1.0) > 1e-6) {
        throw MeshError("vertex normal is not unit length");
      }
    }
  }
}

Vec3 face_normal(const Mesh& m, std::size_t f) {
  const Vec3 e1 = m.face_vertex(f, 1) - m.face_vertex(f, 0);
  const Vec3 e2 = m.face_vertex(f, 2) - m.face_vertex(f, 0);
  return e1.cross(e2);
}

double face_area(const Mesh& m, std::size_t f) {
  return 0.5 * face_normal(m, f).norm();
}

std::vector<Vec3> compute_vertex_normals(const Mesh& m) {
  std::vector<Vec3> normals(m.vertices.size(), Vec3::Zero());
  for (std::size_t f = 0; f < m.faces.size(); ++f) {
    const Vec3 n = face_normal(m, f);  // magnitude = 2 * area
    for (int c = 0; c < 3; ++c) {
      normals[m.faces[f][c]] += n;
    }
  }
  for (auto& n : normals) {
    const double len = n.norm();
    n = (len > 0) ? Vec3(n / len) : Vec3(0, 0, 1);
  }
  return normals;
}

void ensure_vertex_normals(Mesh& m) {
  if (m.vertex_normals.empty()) {
    m.vertex_normals = compute_vertex_normals(m);
  }
}

bool is_watertight(const Mesh& m) {
  // Directed half-edge count: watertight iff every directed edge appears
  // exactly once and its opposite exists.
  std::map<std::pair<int, int>, int> half_edges;
  for (const auto& f : m.faces) {
    for (int c = 0; c < 3; ++c) {
      const int a = f[c];
      const int b = f[(c + 1) % 3];
      if (a == b) return false;
      if (++half_edges[{a, b}] > 1) return false;
    }
  }
  for (const auto& [edge, count] : half_edges) {
    auto it = half_edges.find({edge.second, edge.first});
    if (it == half_edges.end()) return false;
  }
  return !m.faces.empty();
}

void bounding_box(const Mesh& m, Vec3& lo, Vec3& hi) {
  if (m.vertices.empty()) throw MeshError("bounding box of empty mesh");
  lo = hi = m.vertices[0];
  for (const auto& v : m.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
}

Mesh transform_mesh(const Mesh& m, const RigidPose& pose) {
  Mesh out = m;
  const Mat3 r = rotation_to_matrix(pose.rotation);
  for (auto& v : out.vertices) v = r * v + pose.translation;
  for (auto& n : out.vertex_normals) n = r * n;
  return out;
}

Mesh read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open OBJ file: " + path);
  Mesh m;
  std::vector<Vec3> normals;
  std::vector<int> normal_of_vertex;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z)) {
        throw MeshError(path + ":" + std::to_string(line_no) + ": bad vertex");
      }
      m.vertices.emplace_back(x, y, z);
    } else if (tag == "vn") {
      double x, y, z;
      if (!(ss >> x >> y >> z)) {
        throw MeshError(path + ":" + std::to_string(line_no) + ": bad normal");
      }
      normals.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<std::pair<int, int>> corners;  // (vertex, normal or -1)
      std::string tok;
      while (ss >> tok) {
        int vi = 0, ni = -1;
        // v, v/vt, v//vn, v/vt/vn
        const auto s1 = tok.find('/');
        vi = std::stoi(tok.substr(0, s1));
        if (s1 != std::string::npos) {
          const auto s2 = tok.find('/', s1 + 1);
          if (s2 != std::string::npos && s2 + 1 < tok.size()) {
            ni = std::stoi(tok.substr(s2 + 1));
          }
        }
        corners.emplace_back(vi - 1, ni - 1);
      }
      if (corners.size() != 3) {
        throw MeshError(path + ":" + std::to_string(line_no) +
                        ": only triangle faces are supported (got " +
                        std::to_string(corners.size()) + " corners)");
      }
      m.faces.push_back({corners[0].first, corners[1].first, corners[2].first});
      if (normal_of_vertex.size() < m.vertices.size()) {
        normal_of_vertex.resize(m.vertices.size(), -1);
      }
      for (const auto& [vi, ni] : corners) {
        if (ni >= 0 && vi >= 0 && vi < static_cast<int>(normal_of_vertex.size())) {
          normal_of_vertex[vi] = ni;
        }
      }
    }
  }
  if (!normals.empty() && !normal_of_vertex.empty()) {
    bool all_mapped = true;
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
      if (i >= normal_of_vertex.size() || normal_of_vertex[i] < 0 ||
          normal_of_vertex[i] >= static_cast<int>(normals.size())) {
        all_mapped = false;
        break;
      }
    }
    if (all_mapped) {
      m.vertex_normals.resize(m.vertices.size());
      for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        Vec3 n = normals[normal_of_vertex[i]];
        const double len = n.norm();
        m.vertex_normals[i] = (len > 0) ? Vec3(n / len) : Vec3(0, 0, 1);
      }
    }
  }
  validate_mesh(m);
  return m;
}

void write_obj(const Mesh& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write OBJ file: " + path);
  char buf[128];
  for (const auto& v : m.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
    out << buf;
  }
  for (const auto& n : m.vertex_normals) {
    std::snprintf(buf, sizeof(buf), "vn %.9g %.9g %.9g\n", n.x(), n.y(), n.z());
    out << buf;
  }
  const bool has_normals = !m.vertex_normals.empty();
  for (const auto& f : m.faces) {
    if (has_normals) {
      std::snprintf(buf, sizeof(buf), "f %d//%d %d//%d %d//%d\n", f[0] + 1,
                    f[0] + 1, f[1] + 1, f[1] + 1, f[2] + 1, f[2] + 1);
    } else {
      std::snprintf(buf, sizeof(buf), "f %d %d %d\n", f[0] + 1, f[1] + 1,
                    f[2] + 1);
    }
    out << buf;
  }
}

}  // namespace cpf
