#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpf/rotation.hpp"

namespace cpf {

/// Raised for malformed or inconsistent geometry input.
struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Indexed triangle surface. Units are millimeters.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<Vec3> vertex_normals;  // unit length, may be empty

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t face_count() const { return faces.size(); }

  Vec3 face_vertex(std::size_t f, int corner) const {
    return vertices[faces[f][corner]];
  }
};

// Checks index bounds and (when present) normal lengths; throws MeshError.
void validate_mesh(const Mesh& m);

// Area-weighted average of incident face normals.
std::vector<Vec3> compute_vertex_normals(const Mesh& m);

// Fills vertex_normals if absent.
void ensure_vertex_normals(Mesh& m);

// Every edge shared by exactly two consistently oriented faces.
bool is_watertight(const Mesh& m);

Vec3 face_normal(const Mesh& m, std::size_t f);
double face_area(const Mesh& m, std::size_t f);

void bounding_box(const Mesh& m, Vec3& lo, Vec3& hi);

Mesh transform_mesh(const Mesh& m, const RigidPose& pose);

// Wavefront OBJ, triangles only (v / vn / f). Quads are rejected.
Mesh read_obj(const std::string& path);
void write_obj(const Mesh& m, const std::string& path);

}  // namespace cpf
