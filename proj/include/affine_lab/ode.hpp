// Dormand-Prince 5(4) integrator with the Hairer-Wanner continuous extension.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace affine_lab {

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double last_good_time)
      : std::runtime_error(what), last_good_time_(last_good_time) {}
  double last_good_time() const { return last_good_time_; }

 private:
  double last_good_time_;
};

struct OdeOptions {
  double rtol = 1e-9;
  double atol = 1e-9;
  double initial_step = 0.0;  // 0 selects automatically
  double max_step = 0.0;      // 0 means unbounded
  std::size_t max_steps = 1'000'000;
};

struct OdeStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
};

namespace dopri {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
}  // namespace dopri

/// Integrates y' = rhs(t, y) from t_out.front() and writes the dense-output
/// solution at every time in `t_out` (increasing). `on_accept(t, y)` may
/// adjust the accepted state in place and returns true when it did so; it may
/// throw to abort the integration.
template <std::size_t N, class Rhs, class OnAccept>
std::vector<std::array<double, N>> integrate_dopri5(Rhs&& rhs, std::array<double, N> y,
                                                    std::span<const double> t_out,
                                                    const OdeOptions& opt, OnAccept&& on_accept,
                                                    OdeStats* stats = nullptr) {
  using State = std::array<double, N>;
  using namespace dopri;
  std::vector<State> out;
  out.reserve(t_out.size());
  if (t_out.empty()) return out;

  double t = t_out.front();
  const double t_end = t_out.back();
  out.push_back(y);
  std::size_t next = 1;
  OdeStats st;

  auto axpy = [](const State& base, double h,
                 std::initializer_list<std::pair<double, const State*>> terms) {
    State r = base;
    for (const auto& [c, k] : terms)
      for (std::size_t i = 0; i < N; ++i) r[i] += h * c * (*k)[i];
    return r;
  };

  State k1 = rhs(t, y);
  ++st.evaluations;

  // Initial step (Hairer-Norsett-Wanner heuristic).
  double h = opt.initial_step;
  if (h <= 0.0 && t_end > t) {
    double d0 = 0.0, d1n = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = opt.atol + opt.rtol * std::abs(y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      d1n += (k1[i] / sc) * (k1[i] / sc);
    }
    d0 = std::sqrt(d0 / N);
    d1n = std::sqrt(d1n / N);
    h = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h = std::min(h, t_end - t);
    State y1 = axpy(y, h, {{1.0, &k1}});
    State k2 = rhs(t + h, y1);
    ++st.evaluations;
    double d2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = opt.atol + opt.rtol * std::abs(y[i]);
      d2 += ((k2[i] - k1[i]) / sc) * ((k2[i] - k1[i]) / sc);
    }
    d2 = std::sqrt(d2 / N) / h;
    const double dm = std::max(d1n, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / dm, 0.2);
    h = std::min(100.0 * h, h1);
  }
  if (opt.max_step > 0.0) h = std::min(h, opt.max_step);

  double err_prev = 1e-4;
  while (next < t_out.size()) {
    if (st.accepted + st.rejected >= opt.max_steps)
      throw SolverError("maximum number of steps exceeded", t);
    const double span = t_end - t;
    if (span <= 0.0) break;
    bool last = false;
    if (h >= span) {
      h = span;
      last = true;
    }
    if (h < 1e-14 * std::max(1.0, std::abs(t))) {
      std::ostringstream os;
      os << "step size underflow at t = " << t << " (problem may be stiff)";
      throw SolverError(os.str(), t);
    }

    const State y2 = axpy(y, h, {{a21, &k1}});
    const State k2 = rhs(t + c2 * h, y2);
    const State y3 = axpy(y, h, {{a31, &k1}, {a32, &k2}});
    const State k3 = rhs(t + c3 * h, y3);
    const State y4 = axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
    const State k4 = rhs(t + c4 * h, y4);
    const State y5 = axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
    const State k5 = rhs(t + c5 * h, y5);
    const State y6 = axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
    const State k6 = rhs(t + h, y6);
    const State ynew =
        axpy(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
    const State k7 = rhs(t + h, ynew);
    st.evaluations += 6;

    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e =
          h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err += (e / sc) * (e / sc);
    }
    err = std::sqrt(err / N);
    if (!std::isfinite(err)) {
      ++st.rejected;
      h *= 0.1;
      continue;
    }

    if (err <= 1.0) {
      // Continuous extension coefficients for this step.
      State r1 = y, r2, r3, r4, r5;
      for (std::size_t i = 0; i < N; ++i) {
        r2[i] = ynew[i] - y[i];
        r3[i] = h * k1[i] - r2[i];
        r4[i] = r2[i] - h * k7[i] - r3[i];
        r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                     d7 * k7[i]);
      }
      const double t_new = last ? t_end : t + h;
      while (next < t_out.size() && t_out[next] <= t_new) {
        const double theta = (t_out[next] - t) / h;
        const double theta1 = 1.0 - theta;
        State yi;
        for (std::size_t i = 0; i < N; ++i)
          yi[i] = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
        if (t_out[next] == t_new) yi = ynew;
        out.push_back(yi);
        ++next;
      }
      y = ynew;
      t = t_new;
      ++st.accepted;
      if (on_accept(t, y)) {
        k1 = rhs(t, y);
        ++st.evaluations;
        // Replace already-emitted endpoint with the adjusted state.
        if (next > 0 && t_out[next - 1] == t) out.back() = y;
      } else {
        k1 = k7;
      }
      // PI step-size controller.
      const double fac = 0.9 * std::pow(err, -0.7 / 5) * std::pow(err_prev, 0.4 / 5);
      h *= std::clamp(err == 0.0 ? 10.0 : fac, 0.2, 10.0);
      err_prev = std::max(err, 1e-4);
    } else {
      ++st.rejected;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
    if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
  }
  if (stats) *stats = st;
  return out;
}

}  // namespace affine_lab
