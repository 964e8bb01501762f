// Simulates the jump-affine preset and compares sample means with the exact first moments.
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "affine_lab/noise.hpp"
#include "affine_lab/presets.hpp"
#include "affine_lab/rng.hpp"
#include "affine_lab/sde.hpp"
#include "affine_lab/transform.hpp"

using namespace affine_lab;

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 4000;
  const Preset pr = presets::jump_affine();
  const auto p = AdmissibleParams::from_record(pr.record);
  const TimeGrid grid{1.0, 1.0 / 256};
  const std::size_t last = grid.steps();

  double sx = 0, sz = 0, sxx = 0, szz = 0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const NoiseSystem ns = generate_noise(p.m(), p.mu(), grid, substream_seed(42, i), 8.0, 1e-4);
    const PathBundle b = simulate_affine(p, pr.x0, pr.z0, ns);
    if (b.aborted()) continue;
    const double x = b.component("x")[last], z = b.component("z")[last];
    sx += x;
    sz += z;
    sxx += x * x;
    szz += z * z;
    ++used;
  }
  const double m = static_cast<double>(used);
  const double se_x = std::sqrt((sxx / m - (sx / m) * (sx / m)) / m);
  const double se_z = std::sqrt((szz / m - (sz / m) * (sz / m)) / m);
  const MomentFunctionals mf(p);
  std::printf("paths %zu, dt %g\n", used, grid.dt);
  std::printf("E[x(1)]  sample %.5f +- %.5f  exact %.5f\n", sx / m, se_x, mf.mean_x1(pr.x0, 1.0));
  std::printf("E[z(1)]  sample %.5f +- %.5f  exact %.5f\n", sz / m, se_z, mf.mean_x2(pr.x0, pr.z0, 1.0));
}
