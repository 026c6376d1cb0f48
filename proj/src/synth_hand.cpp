#include <algorithm>
#include <cmath>
#include <map>

#include "cpf/hand_model.hpp"

namespace cpf {

namespace {

struct MeshBuilder {
  Mesh mesh;

  int add_vertex(const Vec3& v) {
    mesh.vertices.push_back(v);
    return static_cast<int>(mesh.vertices.size()) - 1;
  }
  void add_face(int a, int b, int c) { mesh.faces.push_back({a, b, c}); }
};

// Subdivided axis-aligned box; grid vertices welded by exact coordinates.
Mesh make_box(const Vec3& lo, const Vec3& hi, int nx, int ny, int nz) {
  MeshBuilder b;
  std::map<std::array<double, 3>, int> weld;
  auto vertex = [&](int i, int j, int k) {
    const Vec3 v(lo.x() + (hi.x() - lo.x()) * i / nx,
                 lo.y() + (hi.y() - lo.y()) * j / ny,
                 lo.z() + (hi.z() - lo.z()) * k / nz);
    const std::array<double, 3> key{v.x(), v.y(), v.z()};
    auto it = weld.find(key);
    if (it != weld.end()) return it->second;
    const int idx = b.add_vertex(v);
    weld.emplace(key, idx);
    return idx;
  };
  // quad (flip controls winding so normals face outward)
  auto quad = [&](int v00, int v10, int v11, int v01, bool flip) {
    if (flip) {
      b.add_face(v00, v01, v11);
      b.add_face(v00, v11, v10);
    } else {
      b.add_face(v00, v11, v01);
      b.add_face(v00, v10, v11);
    }
  };
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      quad(vertex(i, j, 0), vertex(i + 1, j, 0), vertex(i + 1, j + 1, 0),
           vertex(i, j + 1, 0), true);  // z = lo
      quad(vertex(i, j, nz), vertex(i + 1, j, nz), vertex(i + 1, j + 1, nz),
           vertex(i, j + 1, nz), false);  // z = hi
    }
  }
  for (int i = 0; i < nx; ++i) {
    for (int k = 0; k < nz; ++k) {
      quad(vertex(i, 0, k), vertex(i + 1, 0, k), vertex(i + 1, 0, k + 1),
           vertex(i, 0, k + 1), false);  // y = lo
      quad(vertex(i, ny, k), vertex(i + 1, ny, k), vertex(i + 1, ny, k + 1),
           vertex(i, ny, k + 1), true);  // y = hi
    }
  }
  for (int j = 0; j < ny; ++j) {
    for (int k = 0; k < nz; ++k) {
      quad(vertex(0, j, k), vertex(0, j + 1, k), vertex(0, j + 1, k + 1),
           vertex(0, j, k + 1), true);  // x = lo
      quad(vertex(nx, j, k), vertex(nx, j + 1, k), vertex(nx, j + 1, k + 1),
           vertex(nx, j, k + 1), false);  // x = hi
    }
  }
  return b.mesh;
}

// Closed capsule from p0 to p1 with hemispherical caps.
Mesh make_capsule(const Vec3& p0, const Vec3& p1, double radius, int segments,
                  int cap_rings, double station_step) {
  const Vec3 axis = p1 - p0;
  const double length = axis.norm();
  const Vec3 a = axis / length;
  Vec3 ref = (std::abs(a.y()) < 0.9) ? Vec3(0, 1, 0) : Vec3(0, 0, 1);
  const Vec3 u = (ref - ref.dot(a) * a).normalized();
  const Vec3 v = a.cross(u);

  // Ring stack: start-cap rings, body rings (s = 0..length), end-cap rings.
  struct Ring {
    Vec3 center;
    double radius;
  };
  std::vector<Ring> rings;
  for (int i = 1; i < cap_rings; ++i) {
    const double phi = 0.5 * M_PI * i / cap_rings;
    rings.push_back({p0 - radius * std::cos(phi) * a, radius * std::sin(phi)});
  }
  const int body = std::max(1, static_cast<int>(std::ceil(length / station_step)));
  for (int i = 0; i <= body; ++i) {
    rings.push_back({p0 + (length * i / body) * a, radius});
  }
  for (int i = cap_rings - 1; i >= 1; --i) {
    const double phi = 0.5 * M_PI * i / cap_rings;
    rings.push_back({p1 + radius * std::cos(phi) * a, radius * std::sin(phi)});
  }

  MeshBuilder b;
  const int pole0 = b.add_vertex(p0 - radius * a);
  std::vector<int> ring_start(rings.size());
  for (std::size_t r = 0; r < rings.size(); ++r) {
    ring_start[r] = static_cast<int>(b.mesh.vertices.size());
    for (int s = 0; s < segments; ++s) {
      const double ang = 2.0 * M_PI * s / segments;
      b.add_vertex(rings[r].center +
                   rings[r].radius * (std::cos(ang) * u + std::sin(ang) * v));
    }
  }
  const int pole1 = b.add_vertex(p1 + radius * a);

  for (int s = 0; s < segments; ++s) {
    const int sn = (s + 1) % segments;
    b.add_face(pole0, ring_start[0] + sn, ring_start[0] + s);
  }
  for (std::size_t r = 0; r + 1 < rings.size(); ++r) {
    for (int s = 0; s < segments; ++s) {
      const int sn = (s + 1) % segments;
      const int a0 = ring_start[r] + s;
      const int a1 = ring_start[r] + sn;
      const int b0 = ring_start[r + 1] + s;
      const int b1 = ring_start[r + 1] + sn;
      b.add_face(a0, a1, b1);
      b.add_face(a0, b1, b0);
    }
  }
  const int last = static_cast<int>(rings.size()) - 1;
  for (int s = 0; s < segments; ++s) {
    const int sn = (s + 1) % segments;
    b.add_face(pole1, ring_start[last] + s, ring_start[last] + sn);
  }
  return b.mesh;
}

void append_mesh(Mesh& dst, const Mesh& src) {
  const int offset = static_cast<int>(dst.vertices.size());
  dst.vertices.insert(dst.vertices.end(), src.vertices.begin(),
                      src.vertices.end());
  for (const auto& f : src.faces) {
    dst.faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
  }
}

}  // namespace

SynthHandParams SynthHandParams::defaults() {
  SynthHandParams p;
  p.fingers = {
      {Vec3(90, 0, 24), 50, 30, 16, 5.0},    // index
      {Vec3(90, 0, 8), 54, 33, 17, 5.0},     // middle
      {Vec3(90, 0, -8), 50, 31, 16, 4.8},    // ring
      {Vec3(90, 0, -24), 42, 26, 14, 4.5},   // pinky
      // The thumb leaves the palm diagonally so its contact patch opposes
      // the fingers.
      {Vec3(30, 0, -45), 40, 28, 16, 6.0, Vec3(1, 0, -1)},
  };
  return p;
}

SkinnedHand synth_hand(const SynthHandParams& params) {
  if (params.fingers.size() != kFingerCount) {
    throw HandModelError("synth hand needs exactly 5 finger specs");
  }
  const double s = params.scale;
  if (s <= 0) throw HandModelError("scale must be positive");
  for (const auto& f : params.fingers) {
    if (f.proximal <= 0 || f.intermediate <= 0 || f.distal <= 0 ||
        f.radius <= 0) {
      throw HandModelError("finger dimensions must be positive");
    }
  }
  if (params.palm_x_max <= params.palm_x_min ||
      params.palm_z_max <= params.palm_z_min ||
      params.palm_half_thickness <= 0) {
    throw HandModelError("degenerate palm dimensions");
  }

  SkinnedHand hand;
  KinematicTree& tree = hand.tree;
  tree.parent.assign(kJointCount, -1);
  tree.rest_positions.assign(kJointCount, Vec3::Zero());
  tree.knuckle.assign(kJointCount, false);
  tree.rest_positions[0] = Vec3::Zero();

  struct FingerChain {
    Vec3 dir;
    std::array<Vec3, 3> joints;  // MCP, PIP, DIP
    Vec3 tip;
  };
  std::vector<FingerChain> chains(kFingerCount);
  for (int f = 0; f < kFingerCount; ++f) {
    const auto& spec = params.fingers[f];
    FingerChain& chain = chains[f];
    if (spec.dir.norm() < 1e-12) throw HandModelError("degenerate finger dir");
    chain.dir = spec.dir.normalized();
    chain.joints[0] = s * spec.knuckle;
    chain.joints[1] = chain.joints[0] + s * spec.proximal * chain.dir;
    chain.joints[2] = chain.joints[1] + s * spec.intermediate * chain.dir;
    chain.tip = chain.joints[2] + s * spec.distal * chain.dir;
    const int base = 1 + 3 * f;
    tree.parent[base] = 0;
    tree.parent[base + 1] = base;
    tree.parent[base + 2] = base + 1;
    tree.knuckle[base] = true;
    for (int k = 0; k < 3; ++k) {
      tree.rest_positions[base + k] = chain.joints[k];
    }
    tree.tip_positions[base + 2] = chain.tip;
  }

  Mesh mesh = make_box(
      s * Vec3(params.palm_x_min, -params.palm_half_thickness, params.palm_z_min),
      s * Vec3(params.palm_x_max, params.palm_half_thickness, params.palm_z_max),
      params.palm_divisions_x, params.palm_divisions_y, params.palm_divisions_z);
  std::vector<std::vector<SkinWeight>> weights(mesh.vertices.size(),
                                               {{0, 1.0}});

  for (int f = 0; f < kFingerCount; ++f) {
    const FingerChain& chain = chains[f];
    const auto& spec = params.fingers[f];
    const Mesh capsule =
        make_capsule(chain.joints[0], chain.tip, s * spec.radius,
                     params.segments, params.cap_rings, s * params.station_step);
    const int base_joint = 1 + 3 * f;
    // Bone spans along the chain, measured from the knuckle.
    const double b0 = 0.0;
    const double b1 = s * spec.proximal;
    const double b2 = b1 + s * spec.intermediate;
    const double b3 = b2 + s * spec.distal;
    const double blend = s * params.blend_width;
    for (const auto& vert : capsule.vertices) {
      const double t = (vert - chain.joints[0]).dot(chain.dir);
      std::vector<SkinWeight> w;
      auto ramp = [&](double boundary) {
        // 0 below the boundary blend zone, 1 above
        return std::clamp((t - boundary + 0.5 * blend) / blend, 0.0, 1.0);
      };
      (void)b0;
      (void)b3;
      const double w_pip = ramp(b1);
      const double w_dip = ramp(b2);
      const double w_mcp = 1.0 - w_pip;
      const double w_mid = w_pip - w_pip * w_dip;
      const double w_tip = w_pip * w_dip;
      if (w_mcp > 0) w.push_back({base_joint, w_mcp});
      if (w_mid > 0) w.push_back({base_joint + 1, w_mid});
      if (w_tip > 0) w.push_back({base_joint + 2, w_tip});
      weights.push_back(std::move(w));
    }
    append_mesh(mesh, capsule);
  }

  mesh.vertex_normals = compute_vertex_normals(mesh);
  hand.template_mesh = std::move(mesh);
  hand.skin_weights = std::move(weights);
  hand.validate();
  return hand;
}

}  // namespace cpf
