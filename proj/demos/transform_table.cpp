// Prints E exp(<u, X(t)>) for the built-in parameter sets at a few frequencies.
#include <complex>
#include <cstdio>

#include "affine_lab/presets.hpp"
#include "affine_lab/transform.hpp"

using namespace affine_lab;
using namespace std::complex_literals;

int main() {
  const UPoint us[] = {{-1.0, 0.0}, {0.0, 1i}, {-0.5, -2i}};
  for (const Preset& pr : presets::all()) {
    const auto p = AdmissibleParams::from_record(pr.record);
    std::printf("%s (x0=%g, z0=%g)\n", pr.name.c_str(), pr.x0, pr.z0);
    for (const UPoint& u : us) {
      for (double t : {0.5, 1.0, 2.0}) {
        const cplx v = char_fn(p, {pr.x0, pr.z0}, t, u);
        std::printf("  u=(%+.1f%+.1fi, %+.1f%+.1fi) t=%.1f  % .6f %+.6fi\n", u.u1.real(), u.u1.imag(),
                    u.u2.real(), u.u2.imag(), t, v.real(), v.imag());
      }
    }
  }
}
