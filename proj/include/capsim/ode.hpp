#pragma once
// Adaptive Dormand-Prince 5(4) integrator for complex state vectors, with the
// per-component error norm scale = atol + rtol * max(|y0|, |y1|) and a
// proportional step controller.  The integrator exposes single accepted steps
// so callers can monitor functionals (e.g. the decaying norm) step by step and
// re-integrate partial steps when bisecting an event time.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "capsim/operators.hpp"

namespace capsim {

struct IntegratorOptions {
  double rtol = 1e-8;
  double atol = 1e-12;
  double h_init = 1e-3;
  double h_max = std::numeric_limits<double>::infinity();
  long max_steps = 2000000;
};

struct IntegratorStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evaluations = 0;
};

// RHS: callable as rhs(double t, const VectorC& y, VectorC& dydt).
template <class RHS>
class AdaptiveRK45 {
 public:
  AdaptiveRK45(RHS rhs, double t0, VectorC y0, IntegratorOptions opt = {})
      : rhs_(rhs), opt_(opt), t_(t0), y_(std::move(y0)), h_(opt.h_init) {
    const int n = (int)y_.size();
    for (auto& k : k_) k.resize(n);
    y_tmp_.resize(n);
    y_new_.resize(n);
    err_.resize(n);
    rhs_(t_, y_, k_[0]);  // FSAL seed
    ++stats.rhs_evaluations;
  }

  double t() const { return t_; }
  const VectorC& y() const { return y_; }
  void set_state(double t, const VectorC& y) {
    t_ = t;
    y_ = y;
    rhs_(t_, y_, k_[0]);
    ++stats.rhs_evaluations;
  }

  // One accepted step, not stepping past t_limit.  Returns the new time.
  double step(double t_limit) {
    if (t_ >= t_limit) return t_;
    for (;;) {
      if (stats.accepted + stats.rejected > opt_.max_steps)
        throw std::runtime_error("AdaptiveRK45: step limit exceeded");
      double h = std::min({h_, opt_.h_max, t_limit - t_});
      h = std::max(h, 1e-14 * std::max(1.0, std::abs(t_)));
      attempt(h);
      const double norm = error_norm(h);
      if (norm <= 1.0) {
        // Accept; grow the step for the next attempt.
        const double factor =
            (norm == 0.0) ? 10.0 : std::min(10.0, std::max(1.0, 0.9 * std::pow(norm, -0.2)));
        t_ += h;
        y_.swap(y_new_);
        k_[0].swap(k_[6]);  // FSAL: k7 of the accepted step is k1 of the next
        h_ = h * factor;
        ++stats.accepted;
        return t_;
      }
      h_ = h * std::max(0.2, 0.9 * std::pow(norm, -0.2));
      ++stats.rejected;
    }
  }

  // Integrate exactly to t_end.
  void integrate_to(double t_end) {
    while (t_ < t_end - 1e-13 * std::max(1.0, std::abs(t_end))) step(t_end);
    t_ = t_end;
  }

  IntegratorStats stats;

 private:
  void attempt(double h) {
    static constexpr double A[7][6] = {
        {},
        {1.0 / 5},
        {3.0 / 40, 9.0 / 40},
        {44.0 / 45, -56.0 / 15, 32.0 / 9},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
        {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
    static constexpr double C[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static constexpr double E[7] = {71.0 / 57600,     0.0,          -71.0 / 16695,
                                    71.0 / 1920,      -17253.0 / 339200,
                                    22.0 / 525,       -1.0 / 40};
    for (int s = 1; s < 7; ++s) {
      y_tmp_ = y_;
      for (int j = 0; j < s; ++j)
        if (A[s][j] != 0.0) y_tmp_.noalias() += (h * A[s][j]) * k_[j];
      rhs_(t_ + C[s] * h, y_tmp_, k_[s]);
      ++stats.rhs_evaluations;
    }
    // Stage 7 argument is already the 5th-order solution (first-same-as-last).
    y_new_ = y_tmp_;
    err_.setZero();
    for (int s = 0; s < 7; ++s)
      if (E[s] != 0.0) err_.noalias() += (h * E[s]) * k_[s];
  }

  double error_norm(double /*h*/) const {
    const int n = (int)y_.size();
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double scale =
          opt_.atol + opt_.rtol * std::max(std::abs(y_[i]), std::abs(y_new_[i]));
      const double e = std::abs(err_[i]) / scale;
      acc += e * e;
    }
    return std::sqrt(acc / n);
  }

  RHS rhs_;
  IntegratorOptions opt_;
  double t_;
  VectorC y_;
  double h_;
  VectorC k_[7], y_tmp_, y_new_, err_;
};

}  // namespace capsim
