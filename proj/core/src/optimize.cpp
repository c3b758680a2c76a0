// SPDX-License-Identifier: Apache-2.0

#include "facetpart/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "facetpart/error.hpp"

namespace facetpart {

namespace {

constexpr double kTiny = 1e-25;
constexpr double kGolden = 1.618034;
constexpr double kCGold = 0.3819660;
constexpr double kMaxMagnify = 100.0;

// Counts evaluations, enforces the cap and remembers the best point seen.
class Tracker {
 public:
  Tracker(const Objective& f, std::size_t cap) : f_(f), cap_(cap) {}

  double operator()(std::span<const double> x) {
    ++count_;
    const double v = f_(x);
    if (best_x_.empty() || v < best_) {
      best_ = v;
      best_x_.assign(x.begin(), x.end());
    }
    return v;
  }

  bool exhausted() const noexcept { return count_ >= cap_; }
  std::size_t count() const noexcept { return count_; }
  double best() const noexcept { return best_; }
  const std::vector<double>& best_x() const noexcept { return best_x_; }

 private:
  const Objective& f_;
  std::size_t cap_;
  std::size_t count_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
  std::vector<double> best_x_;
};

// Minimizes f(x + t * d) over t; moves x to the minimizer and returns f there.
double line_minimize(Tracker& f, std::vector<double>& x, std::vector<double>& d,
                     double fx) {
  const std::size_t n = x.size();
  std::vector<double> trial(n);
  const auto phi = [&](double t) {
    for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + t * d[i];
    return f(trial);
  };

  // Bracket a minimum: a < b < c (or reversed) with f(b) <= f(a), f(c).
  double ax = 0.0, bx = 1.0;
  double fa = fx, fb = phi(bx);
  if (fb > fa) {
    std::swap(ax, bx);
    std::swap(fa, fb);
  }
  double cx = bx + kGolden * (bx - ax);
  double fc = phi(cx);
  while (fb > fc && !f.exhausted()) {
    const double r = (bx - ax) * (fb - fc);
    const double q = (bx - cx) * (fb - fa);
    const double denom = 2.0 * std::copysign(std::max(std::abs(q - r), kTiny), q - r);
    double u = bx - ((bx - cx) * q - (bx - ax) * r) / denom;
    const double ulim = bx + kMaxMagnify * (cx - bx);
    double fu = 0.0;
    if ((bx - u) * (u - cx) > 0.0) {
      fu = phi(u);
      if (fu < fc) {
        ax = bx, bx = u, fa = fb, fb = fu;
        break;
      }
      if (fu > fb) {
        cx = u, fc = fu;
        break;
      }
      u = cx + kGolden * (cx - bx);
      fu = phi(u);
    } else if ((cx - u) * (u - ulim) > 0.0) {
      fu = phi(u);
      if (fu < fc) {
        bx = cx, cx = u, u = cx + kGolden * (cx - bx);
        fb = fc, fc = fu, fu = phi(u);
      }
    } else if ((u - ulim) * (ulim - cx) >= 0.0) {
      u = ulim;
      fu = phi(u);
    } else {
      u = cx + kGolden * (cx - bx);
      fu = phi(u);
    }
    ax = bx, bx = cx, cx = u;
    fa = fb, fb = fc, fc = fu;
  }

  // Brent's parabolic interpolation with golden-section fallback.
  constexpr double kLineTol = 1e-4;
  double a = std::min(ax, cx), b = std::max(ax, cx);
  double xb = bx, w = bx, v = bx;
  double fxb = fb, fw = fb, fv = fb;
  double e = 0.0, step = 0.0;
  for (int iter = 0; iter < 100 && !f.exhausted(); ++iter) {
    const double xm = 0.5 * (a + b);
    const double tol1 = kLineTol * std::abs(xb) + 1e-10;
    const double tol2 = 2.0 * tol1;
    if (std::abs(xb - xm) <= tol2 - 0.5 * (b - a)) break;
    if (std::abs(e) > tol1) {
      double r = (xb - w) * (fxb - fv);
      double q = (xb - v) * (fxb - fw);
      double pp = (xb - v) * q - (xb - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) pp = -pp;
      q = std::abs(q);
      const double etemp = e;
      e = step;
      if (std::abs(pp) >= std::abs(0.5 * q * etemp) || pp <= q * (a - xb) ||
          pp >= q * (b - xb)) {
        e = (xb >= xm) ? a - xb : b - xb;
        step = kCGold * e;
      } else {
        step = pp / q;
        const double u = xb + step;
        if (u - a < tol2 || b - u < tol2) step = std::copysign(tol1, xm - xb);
      }
    } else {
      e = (xb >= xm) ? a - xb : b - xb;
      step = kCGold * e;
    }
    const double u = std::abs(step) >= tol1 ? xb + step : xb + std::copysign(tol1, step);
    const double fu = phi(u);
    if (fu <= fxb) {
      if (u >= xb) a = xb; else b = xb;
      v = w, w = xb, xb = u;
      fv = fw, fw = fxb, fxb = fu;
    } else {
      if (u < xb) a = u; else b = u;
      if (fu <= fw || w == xb) {
        v = w, w = u, fv = fw, fw = fu;
      } else if (fu <= fv || v == xb || v == w) {
        v = u, fv = fu;
      }
    }
  }

  // Fall back to the best bracketing point if Brent never improved on it.
  double t = xb, ft = fxb;
  if (fa < ft) t = ax, ft = fa;
  if (fc < ft) t = cx, ft = fc;
  if (ft > fx) return fx;  // keep x unchanged
  for (std::size_t i = 0; i < n; ++i) {
    d[i] *= t;
    x[i] += d[i];
  }
  return ft;
}

MinimizeResult finish(const Tracker& f, bool converged) {
  MinimizeResult r;
  r.x = f.best_x();
  r.value = f.best();
  r.evaluations = f.count();
  r.converged = converged;
  return r;
}

}  // namespace

MinimizeResult minimize_powell(const Objective& objective, std::vector<double> x0,
                               const MinimizeOptions& options) {
  if (x0.empty()) throw InvalidArgument("cannot minimize over zero variables");
  Tracker f(objective, std::max<std::size_t>(options.max_evaluations, 1));
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> dirs(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) dirs[i][i] = options.initial_step;

  std::vector<double> p = x0;
  double fret = f(p);
  std::vector<double> pt = p;
  bool converged = false;
  while (!f.exhausted()) {
    const double fp = fret;
    std::size_t ibig = 0;
    double del = 0.0;
    for (std::size_t i = 0; i < n && !f.exhausted(); ++i) {
      const double before = fret;
      fret = line_minimize(f, p, dirs[i], fret);
      if (before - fret > del) {
        del = before - fret;
        ibig = i;
      }
    }
    if (2.0 * (fp - fret) <= options.tolerance * (std::abs(fp) + std::abs(fret)) + kTiny) {
      converged = true;
      break;
    }
    if (f.exhausted()) break;

    std::vector<double> ptt(n), xit(n);
    for (std::size_t j = 0; j < n; ++j) {
      ptt[j] = 2.0 * p[j] - pt[j];
      xit[j] = p[j] - pt[j];
      pt[j] = p[j];
    }
    const double fptt = f(ptt);
    if (fptt < fp) {
      const double t = 2.0 * (fp - 2.0 * fret + fptt) * std::pow(fp - fret - del, 2) -
                       del * std::pow(fp - fptt, 2);
      if (t < 0.0 && !f.exhausted()) {
        fret = line_minimize(f, p, xit, fret);
        dirs[ibig] = dirs[n - 1];
        dirs[n - 1] = xit;
      }
    }
  }
  return finish(f, converged);
}

MinimizeResult minimize_nelder_mead(const Objective& objective, std::vector<double> x0,
                                    const MinimizeOptions& options) {
  if (x0.empty()) throw InvalidArgument("cannot minimize over zero variables");
  Tracker f(objective, std::max<std::size_t>(options.max_evaluations, 1));
  const std::size_t n = x0.size();

  std::vector<std::vector<double>> simplex(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += options.initial_step;
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i <= n && !f.exhausted(); ++i) fv[i] = f(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  bool converged = false;
  while (!f.exhausted()) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back(),
                      second = order[n - 1];

    double diameter = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        diameter = std::max(diameter, std::abs(simplex[i][j] - simplex[best][j]));
      }
    }
    if (fv[worst] - fv[best] <= options.tolerance && diameter <= options.tolerance) {
      converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
    }
    for (std::size_t j = 0; j < n; ++j) xr[j] = centroid[j] + (centroid[j] - simplex[worst][j]);
    const double fr = f(xr);
    if (fr < fv[best]) {
      for (std::size_t j = 0; j < n; ++j) xe[j] = centroid[j] + 2.0 * (xr[j] - centroid[j]);
      const double fe = f.exhausted() ? fr : f(xe);
      if (fe < fr) {
        simplex[worst] = xe, fv[worst] = fe;
      } else {
        simplex[worst] = xr, fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = xr, fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const auto& from = outside ? xr : simplex[worst];
    for (std::size_t j = 0; j < n; ++j) xc[j] = centroid[j] + 0.5 * (from[j] - centroid[j]);
    const double fc = f(xc);
    if (fc < (outside ? fr : fv[worst])) {
      simplex[worst] = xc, fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n && !f.exhausted(); ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < n; ++j) {
        simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
      }
      fv[i] = f(simplex[i]);
    }
  }
  return finish(f, converged);
}

}  // namespace facetpart
