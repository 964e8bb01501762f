// Built-in parameter sets used by the tests, the sample configs and the acceptance runs.
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "affine_lab/params.hpp"

namespace affine_lab {

struct Preset {
  std::string name;
  ParamRecord record;
  double x0 = 1.0;
  double z0 = 0.0;  // second coordinate: z for the affine process, y for the catalytic one
  double l = 1.0;   // catalytic coupling
};

namespace presets {

/// x == 0, z an Ornstein-Uhlenbeck process: a = 1, beta22 = -1.
inline Preset ou() {
  Preset p{"ou", {}, 0.0, 0.5, 1.0};
  p.record.a = 1.0;
  p.record.beta.m22 = -1.0;
  return p;
}

/// x a CIR process (alpha11 = 0.5, beta11 = -1, b1 = 0.5), z deterministic given x.
inline Preset cir() {
  Preset p{"cir", {}, 1.0, 0.0, 1.0};
  p.record.alpha = {0.5, 0.0, 0.0, 0.0};
  p.record.beta.m11 = -1.0;
  p.record.b1 = 0.5;
  p.record.beta.m22 = -1.0;
  return p;
}

/// Full jump-affine set with finite atomic m and mu.
inline Preset jump_affine() {
  Preset p{"jump_affine", {}, 1.0, 0.5, 1.0};
  auto& r = p.record;
  r.a = 0.5;
  r.alpha = {0.5, 0.2, 0.2, 0.4};
  r.b1 = 0.5;
  r.b2 = 0.2;
  r.beta = {-1.0, 0.0, 0.3, -0.8};
  r.m = JumpMeasure::finite_atomic({{{0.5, 0.3}, 0.8}, {{0.2, -0.4}, 0.5}, {{0.0, 0.6}, 0.4}});
  r.mu = JumpMeasure::finite_atomic({{{0.4, 0.2}, 1.0}, {{0.3, -0.5}, 0.6}});
  return p;
}

/// Same structure with product-exponential jump densities.
inline Preset product_exponential() {
  Preset p{"product_exponential", {}, 1.0, 0.0, 1.0};
  auto& r = p.record;
  r.a = 0.2;
  r.alpha = {0.3, 0.1, 0.1, 0.2};
  r.b1 = 0.3;
  r.b2 = 0.1;
  r.beta = {-0.8, 0.0, 0.2, -0.6};
  r.m = JumpMeasure::product_exponential(1.0, 3.0, 4.0, 0.6);
  r.mu = JumpMeasure::product_exponential(0.8, 4.0, 5.0, 0.5);
  return p;
}

/// Catalyst/reactant set (b2 >= 0); l couples the reactant branching to x.
inline Preset catalytic() {
  Preset p{"catalytic", {}, 1.0, 0.5, 0.8};
  auto& r = p.record;
  r.a = 0.3;
  r.alpha = {0.4, 0.1, 0.1, 0.3};
  r.b1 = 0.5;
  r.b2 = 0.4;
  r.beta = {-0.5, 0.0, 0.2, -0.7};
  r.m = JumpMeasure::finite_atomic({{{0.3, 0.4}, 0.5}, {{0.2, -0.3}, 0.3}});
  r.mu = JumpMeasure::finite_atomic({{{0.3, 0.2}, 0.6}, {{0.2, -0.1}, 0.4}});
  return p;
}

/// No noise and no jumps: x == 0, z' = 1 - z.
inline Preset deterministic() {
  Preset p{"deterministic", {}, 0.0, 0.0, 1.0};
  p.record.b2 = 1.0;
  p.record.beta.m22 = -1.0;
  return p;
}

inline std::vector<Preset> all() {
  return {ou(), cir(), jump_affine(), product_exponential(), catalytic(), deterministic()};
}

inline Preset by_name(std::string_view name) {
  for (Preset& p : all())
    if (p.name == name) return p;
  throw std::invalid_argument("unknown preset: " + std::string(name));
}

}  // namespace presets
}  // namespace affine_lab
