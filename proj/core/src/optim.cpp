#include "artic/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace artic {

namespace {

LbfgsResult lbfgsresult_from(double e, double gn, int it, bool ok,
                             std::vector<double> trace) {
  LbfgsResult r;
  r.energy = e;
  r.gradient_norm = gn;
  r.iterations = it;
  r.converged = ok;
  r.energies = std::move(trace);
  return r;
}

}  // namespace

LbfgsResult lbfgs_minimize(const EnergyFn& eval, Eigen::VectorXd& x,
                           const LbfgsOptions& opts) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd grad(n);
  double energy = eval(x, grad);
  if (!std::isfinite(energy))
    throw std::runtime_error("optim: non-finite energy at start");
  std::vector<double> trace{energy};

  std::vector<Eigen::VectorXd> s_hist, y_hist;
  std::vector<double> rho_hist;
  Eigen::VectorXd x_prev = x, g_prev = grad;

  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    const double gnorm = grad.norm();
    if (gnorm < opts.gradient_tolerance)
      return lbfgsresult_from(energy, gnorm, it, true, std::move(trace));

    // Two-loop recursion.
    Eigen::VectorXd q = grad;
    const int m = static_cast<int>(s_hist.size());
    std::vector<double> alpha(static_cast<std::size_t>(m));
    for (int i = m - 1; i >= 0; --i) {
      alpha[static_cast<std::size_t>(i)] =
          rho_hist[static_cast<std::size_t>(i)] *
          s_hist[static_cast<std::size_t>(i)].dot(q);
      q -= alpha[static_cast<std::size_t>(i)] *
           y_hist[static_cast<std::size_t>(i)];
    }
    if (m > 0) {
      const auto& sl = s_hist.back();
      const auto& yl = y_hist.back();
      const double gamma = sl.dot(yl) / yl.squaredNorm();
      q *= gamma;
    }
    for (int i = 0; i < m; ++i) {
      const double beta = rho_hist[static_cast<std::size_t>(i)] *
                          y_hist[static_cast<std::size_t>(i)].dot(q);
      q += (alpha[static_cast<std::size_t>(i)] - beta) *
           s_hist[static_cast<std::size_t>(i)];
    }
    Eigen::VectorXd dir = -q;
    double dg = dir.dot(grad);
    if (!(dg < 0.0)) {  // fallback to steepest descent
      dir = -grad;
      dg = -gnorm * gnorm;
    }

    // Weak Wolfe bracketing: sufficient decrease plus a curvature bound
    // so accepted pairs always have positive s.y; steps that satisfy
    // only the decrease condition are kept as a fallback.
    constexpr double kCurvature = 0.9;
    double step = 1.0;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    bool accepted = false;
    bool have_armijo = false;
    Eigen::VectorXd x_try(n), g_try(n);
    Eigen::VectorXd x_arm(n), g_arm(n);
    double e_try = energy;
    double e_arm = energy;
    for (int ls = 0; ls < opts.max_line_search_steps; ++ls) {
      x_try = x + step * dir;
      e_try = eval(x_try, g_try);
      if (!std::isfinite(e_try) ||
          e_try > energy + opts.armijo_c1 * step * dg) {
        hi = step;
      } else if (g_try.dot(dir) < kCurvature * dg) {
        have_armijo = true;
        x_arm = x_try;
        g_arm = g_try;
        e_arm = e_try;
        lo = step;
      } else {
        accepted = true;
        break;
      }
      step = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * step;
    }
    if (!accepted) {
      if (!have_armijo)
        return lbfgsresult_from(energy, gnorm, it, false, std::move(trace));
      x_try = x_arm;
      g_try = g_arm;
      e_try = e_arm;
    }

    x_prev = x;
    g_prev = grad;
    x = x_try;
    grad = g_try;
    energy = e_try;
    trace.push_back(energy);

    Eigen::VectorXd sv = x - x_prev;
    Eigen::VectorXd yv = grad - g_prev;
    const double sy = sv.dot(yv);
    if (sy > 1e-12 * sv.norm() * yv.norm()) {
      s_hist.push_back(std::move(sv));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.history) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho_hist.erase(rho_hist.begin());
      }
    }
  }
  return lbfgsresult_from(energy, grad.norm(), it, false, std::move(trace));
}

void solve_box_qp(const Eigen::MatrixXd& h, const Eigen::VectorXd& g,
                  const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                  Eigen::VectorXd& x, double tolerance, int max_sweeps) {
  const Eigen::Index n = g.size();
  if (h.rows() != n || h.cols() != n || lo.size() != n || hi.size() != n ||
      x.size() != n)
    throw std::runtime_error("optim: box QP size mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(lo(i) <= hi(i)))
      throw std::runtime_error("optim: box QP empty box");
    x(i) = std::clamp(x(i), lo(i), hi(i));
  }
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double hii = h(i, i);
      // partial derivative wrt x_i at the current point
      const double d = h.row(i).dot(x) + g(i);
      double xi_new;
      if (hii > 1e-300) {
        xi_new = std::clamp(x(i) - d / hii, lo(i), hi(i));
      } else if (d > 0.0) {
        xi_new = lo(i);
      } else if (d < 0.0) {
        xi_new = hi(i);
      } else {
        xi_new = x(i);
      }
      max_change = std::max(max_change, std::abs(xi_new - x(i)));
      x(i) = xi_new;
    }
    if (max_change <= tolerance) break;
  }
}

}  // namespace artic
