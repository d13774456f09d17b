// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace dppt {

constexpr float kInf = std::numeric_limits<float>::infinity();

struct Vec3 {
  float x = 0.f, y = 0.f, z = 0.f;

  constexpr Vec3() = default;
  constexpr Vec3(float a, float b, float c) : x(a), y(b), z(c) {}
  explicit constexpr Vec3(float a) : x(a), y(a), z(a) {}

  float operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  float& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }
  Vec3 operator*(float s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(float s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator*=(const Vec3& o) { x *= o.x; y *= o.y; z *= o.z; return *this; }
  Vec3& operator*=(float s) { x *= s; y *= s; z *= s; return *this; }
  bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }
};

inline Vec3 operator*(float s, const Vec3& v) { return v * s; }
inline float dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline float lengthSq(const Vec3& v) { return dot(v, v); }
inline float length(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalize(const Vec3& v) { return v / length(v); }
inline Vec3 min(const Vec3& a, const Vec3& b) {
  return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
inline Vec3 max(const Vec3& a, const Vec3& b) {
  return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}
inline float maxComponent(const Vec3& v) { return std::max(v.x, std::max(v.y, v.z)); }
inline bool isFinite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

struct Aabb {
  Vec3 lo{kInf, kInf, kInf};
  Vec3 hi{-kInf, -kInf, -kInf};

  bool empty() const { return lo.x > hi.x || lo.y > hi.y || lo.z > hi.z; }
  void extend(const Vec3& p) { lo = min(lo, p); hi = max(hi, p); }
  void extend(const Aabb& b) { lo = min(lo, b.lo); hi = max(hi, b.hi); }
  Vec3 center() const { return (lo + hi) * 0.5f; }
  Vec3 diagonal() const { return hi - lo; }
  bool contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
  }
  bool contains(const Aabb& b) const {
    return b.empty() || (contains(b.lo) && contains(b.hi));
  }
  bool overlaps(const Aabb& b) const {
    return !empty() && !b.empty() && lo.x <= b.hi.x && hi.x >= b.lo.x && lo.y <= b.hi.y &&
           hi.y >= b.lo.y && lo.z <= b.hi.z && hi.z >= b.lo.z;
  }
  float surfaceArea() const {
    if (empty()) return 0.f;
    Vec3 d = diagonal();
    return 2.f * (d.x * d.y + d.y * d.z + d.z * d.x);
  }
  float volume() const {
    if (empty()) return 0.f;
    Vec3 d = diagonal();
    return d.x * d.y * d.z;
  }
  int longestAxis() const {
    Vec3 d = diagonal();
    if (d.x >= d.y && d.x >= d.z) return 0;
    return d.y >= d.z ? 1 : 2;
  }
};

inline Aabb intersection(const Aabb& a, const Aabb& b) {
  Aabb r;
  r.lo = max(a.lo, b.lo);
  r.hi = min(a.hi, b.hi);
  if (r.lo.x > r.hi.x || r.lo.y > r.hi.y || r.lo.z > r.hi.z) return Aabb{};
  return r;
}

// Slab test; returns true and the clipped interval if the ray overlaps the box
// anywhere in [t0,t1].
inline bool intersectBox(const Aabb& b, const Vec3& org, const Vec3& invDir, float t0, float t1,
                         float& tNear, float& tFar) {
  float tn = t0, tf = t1;
  for (int a = 0; a < 3; ++a) {
    if (std::isinf(invDir[a])) {
      // Degenerate slab: the ray runs parallel to this axis pair. Avoid the
      // 0 * inf = NaN case for origins exactly on a face.
      if (org[a] < b.lo[a] || org[a] > b.hi[a]) return false;
      continue;
    }
    float lo = (b.lo[a] - org[a]) * invDir[a];
    float hi = (b.hi[a] - org[a]) * invDir[a];
    if (lo > hi) std::swap(lo, hi);
    tn = std::max(tn, lo);
    tf = std::min(tf, hi);
    if (tn > tf) return false;
  }
  tNear = tn;
  tFar = tf;
  return true;
}

// Row-major 3x4 affine transform (rows of the linear part plus translation in
// the fourth column).
struct Affine3 {
  float m[3][4] = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}};

  static Affine3 identity() { return {}; }
  static Affine3 translate(const Vec3& t) {
    Affine3 a;
    a.m[0][3] = t.x; a.m[1][3] = t.y; a.m[2][3] = t.z;
    return a;
  }
  static Affine3 scale(float s) {
    Affine3 a;
    a.m[0][0] = a.m[1][1] = a.m[2][2] = s;
    return a;
  }
  static Affine3 rotateY(float rad) {
    Affine3 a;
    float c = std::cos(rad), s = std::sin(rad);
    a.m[0][0] = c;  a.m[0][2] = s;
    a.m[2][0] = -s; a.m[2][2] = c;
    return a;
  }

  Vec3 applyPoint(const Vec3& p) const {
    return {m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z + m[0][3],
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z + m[1][3],
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z + m[2][3]};
  }
  Vec3 applyVector(const Vec3& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }
  Aabb applyBox(const Aabb& b) const {
    Aabb r;
    if (b.empty()) return r;
    for (int i = 0; i < 8; ++i)
      r.extend(applyPoint({i & 1 ? b.hi.x : b.lo.x, i & 2 ? b.hi.y : b.lo.y,
                           i & 4 ? b.hi.z : b.lo.z}));
    return r;
  }
};

inline Affine3 operator*(const Affine3& a, const Affine3& b) {
  Affine3 r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) {
      float s = 0.f;
      for (int k = 0; k < 3; ++k) s += a.m[i][k] * b.m[k][j];
      if (j == 3) s += a.m[i][3];
      r.m[i][j] = s;
    }
  }
  return r;
}

inline Affine3 inverse(const Affine3& a) {
  // Adjugate of the 3x3 linear part, then back-transform the translation.
  const auto& m = a.m;
  float det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
              m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
              m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  float id = 1.f / det;
  Affine3 r;
  r.m[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * id;
  r.m[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * id;
  r.m[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * id;
  r.m[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * id;
  r.m[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * id;
  r.m[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * id;
  r.m[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * id;
  r.m[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * id;
  r.m[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * id;
  Vec3 t{m[0][3], m[1][3], m[2][3]};
  Vec3 it = r.applyVector(t);
  r.m[0][3] = -it.x; r.m[1][3] = -it.y; r.m[2][3] = -it.z;
  return r;
}

// Orthonormal basis around a unit normal (Duff et al. branchless variant).
inline void buildBasis(const Vec3& n, Vec3& t, Vec3& b) {
  float sign = std::copysign(1.f, n.z);
  float aa = -1.f / (sign + n.z);
  float bb = n.x * n.y * aa;
  t = {1.f + sign * n.x * n.x * aa, sign * bb, -sign * n.x};
  b = {bb, sign + n.y * n.y * aa, -n.y};
}

}  // namespace dppt
