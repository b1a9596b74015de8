#include "torsion/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace torsion {

FaceCoeffs half_point_coeffs(const ScalarField& g_node) {
  const GridSpec& g = g_node.grid;
  validate(g);
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) {
      const double val = g_node(i, j);
      if (!std::isfinite(val) || !(val > 0.0)) {
        throw std::invalid_argument(
            "half_point_coeffs: coefficient must be positive finite at node (" +
            std::to_string(i) + "," + std::to_string(j) + "), got " +
            std::to_string(val));
      }
    }
  }
  FaceCoeffs fc;
  fc.grid = g;
  const std::size_t n = g.npoints();
  fc.east.assign(n, 0.0);
  fc.west.assign(n, 0.0);
  fc.north.assign(n, 0.0);
  fc.south.assign(n, 0.0);
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) {
      const std::size_t k = g_node.idx(i, j);
      if (i < g.nx) fc.east[k] = 0.5 * (g_node(i, j) + g_node(i + 1, j));
      if (i > 0) fc.west[k] = 0.5 * (g_node(i, j) + g_node(i - 1, j));
      if (j < g.ny) fc.north[k] = 0.5 * (g_node(i, j) + g_node(i, j + 1));
      if (j > 0) fc.south[k] = 0.5 * (g_node(i, j) + g_node(i, j - 1));
    }
  }
  return fc;
}

void LinearSystem::apply(const std::vector<double>& x,
                         std::vector<double>& y) const {
  y.assign(size(), 0.0);
  for (int jj = 0; jj < nyi; ++jj) {
    for (int ii = 0; ii < nxi; ++ii) {
      const std::size_t k = index(ii, jj);
      double acc = diag[k] * x[k];
      if (ii + 1 < nxi) acc += east[k] * x[k + 1];
      if (ii > 0) acc += west[k] * x[k - 1];
      if (jj + 1 < nyi) acc += north[k] * x[k + nxi];
      if (jj > 0) acc += south[k] * x[k - nxi];
      y[k] = acc;
    }
  }
}

LinearSystem assemble(const FaceCoeffs& fc, const ScalarField& rhs) {
  const GridSpec& g = fc.grid;
  if (!(rhs.grid == g)) {
    throw std::invalid_argument("assemble: rhs grid does not match coefficients");
  }
  LinearSystem ls;
  ls.grid = g;
  ls.nxi = g.nx - 1;
  ls.nyi = g.ny - 1;
  const std::size_t n = ls.size();
  ls.diag.assign(n, 0.0);
  ls.east.assign(n, 0.0);
  ls.west.assign(n, 0.0);
  ls.north.assign(n, 0.0);
  ls.south.assign(n, 0.0);
  ls.rhs.assign(n, 0.0);
  const double ax = 1.0 / (g.dx() * g.dx());
  const double ay = 1.0 / (g.dy() * g.dy());
  for (int jj = 0; jj < ls.nyi; ++jj) {
    const int j = jj + 1;
    for (int ii = 0; ii < ls.nxi; ++ii) {
      const int i = ii + 1;
      const std::size_t node = static_cast<std::size_t>(j) * (g.nx + 1) + i;
      const std::size_t k = ls.index(ii, jj);
      const double ge = fc.east[node], gw = fc.west[node];
      const double gn = fc.north[node], gs = fc.south[node];
      ls.diag[k] = (ge + gw) * ax + (gn + gs) * ay;
      // Dirichlet neighbors are zero; keep the stencil entry only when the
      // neighbor is an unknown.
      if (ii + 1 < ls.nxi) ls.east[k] = -ge * ax;
      if (ii > 0) ls.west[k] = -gw * ax;
      if (jj + 1 < ls.nyi) ls.north[k] = -gn * ay;
      if (jj > 0) ls.south[k] = -gs * ay;
      ls.rhs[k] = rhs(i, j);
    }
  }
  return ls;
}

std::vector<double> solve_linear(const LinearSystem& ls, double tol,
                                 int max_iter, const std::vector<double>* x0,
                                 LinearStats* stats) {
  const std::size_t n = ls.size();
  if (max_iter <= 0) max_iter = static_cast<int>(10 * n);
  if (x0 && x0->size() != n) {
    throw std::invalid_argument("solve_linear: warm start has wrong length");
  }
  const double bnorm = std::sqrt(
      std::inner_product(ls.rhs.begin(), ls.rhs.end(), ls.rhs.begin(), 0.0));
  if (bnorm == 0.0) {
    if (stats) *stats = {0, 0.0};
    return std::vector<double>(n, 0.0);
  }
  std::vector<double> x = x0 ? *x0 : std::vector<double>(n, 0.0);
  std::vector<double> r(n), z(n), p(n), ap(n);
  ls.apply(x, ap);
  for (std::size_t k = 0; k < n; ++k) r[k] = ls.rhs[k] - ap[k];

  auto rnorm = [&] {
    return std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
  };
  double rel = rnorm() / bnorm;
  if (rel <= tol) {
    if (stats) *stats = {0, rel};
    return x;
  }
  for (std::size_t k = 0; k < n; ++k) z[k] = r[k] / ls.diag[k];
  p = z;
  double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
  for (int it = 1; it <= max_iter; ++it) {
    ls.apply(p, ap);
    const double pap = std::inner_product(p.begin(), p.end(), ap.begin(), 0.0);
    if (!(pap > 0.0)) {
      throw SolverError("conjugate gradients: matrix is not positive definite",
                        rel, it);
    }
    const double alpha = rz / pap;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * ap[k];
    }
    rel = rnorm() / bnorm;
    if (rel <= tol) {
      if (stats) *stats = {it, rel};
      return x;
    }
    for (std::size_t k = 0; k < n; ++k) z[k] = r[k] / ls.diag[k];
    const double rz_new =
        std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    const double beta = rz_new / rz;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
    rz = rz_new;
  }
  throw SolverError("conjugate gradients: no convergence to " +
                        std::to_string(tol) + " within " +
                        std::to_string(max_iter) + " iterations",
                    rel, max_iter);
}

namespace {

std::vector<double> interior_of(const ScalarField& u) {
  const GridSpec& g = u.grid;
  std::vector<double> x(static_cast<std::size_t>(g.nx - 1) * (g.ny - 1));
  std::size_t k = 0;
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 1; i < g.nx; ++i) x[k++] = u(i, j);
  }
  return x;
}

ScalarField embed_interior(const std::vector<double>& x, const GridSpec& g) {
  ScalarField u(g);
  std::size_t k = 0;
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 1; i < g.nx; ++i) u(i, j) = x[k++];
  }
  return u;
}

ScalarField frozen_coefficients(const ScalarField& u_prev,
                                const PlasticityFn& fn) {
  ScalarField gs = gradient_sq(u_prev);
  ScalarField g_node(u_prev.grid);
  for (std::size_t k = 0; k < gs.v.size(); ++k) g_node.v[k] = fn(gs.v[k]);
  return g_node;
}

}  // namespace

ScalarField solve_linearized(const ScalarField& u_prev, const PlasticityFn& fn,
                             const ScalarField& rhs, double linear_tol,
                             int linear_max_iter, const std::vector<double>* x0,
                             LinearStats* stats) {
  const FaceCoeffs fc = half_point_coeffs(frozen_coefficients(u_prev, fn));
  const LinearSystem ls = assemble(fc, rhs);
  const std::vector<double> x =
      solve_linear(ls, linear_tol, linear_max_iter, x0, stats);
  return embed_interior(x, u_prev.grid);
}

ForwardResult solve_forward(const GridSpec& grid, const PlasticityFn& fn,
                            const ScalarField& rhs,
                            const ForwardSettings& settings) {
  validate(grid);
  if (!(rhs.grid == grid)) {
    throw std::invalid_argument("solve_forward: rhs grid mismatch");
  }
  if (!(settings.tol > 0.0) || settings.max_iter < 1) {
    throw std::invalid_argument("solve_forward: tol must be positive, max_iter >= 1");
  }
  ForwardResult res;
  res.u_star = ScalarField(grid);
  std::vector<double> warm = interior_of(res.u_star);
  for (int it = 1; it <= settings.max_iter; ++it) {
    ScalarField u_next =
        solve_linearized(res.u_star, fn, rhs, settings.linear_tol,
                         settings.linear_max_iter, &warm, nullptr);
    ScalarField diff(grid);
    for (std::size_t k = 0; k < diff.v.size(); ++k) {
      diff.v[k] = u_next.v[k] - res.u_star.v[k];
    }
    const double step = h1_norm(diff);
    res.diff_history.push_back(step);
    res.iterations = it;
    res.u_star = std::move(u_next);
    warm = interior_of(res.u_star);
    if (step <= settings.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

ForwardResult solve_forward(const GridSpec& grid, const PlasticityFn& fn,
                            double phi, const ForwardSettings& settings) {
  if (!std::isfinite(phi)) {
    throw std::invalid_argument("solve_forward: twist angle must be finite");
  }
  validate(grid);
  ScalarField rhs(grid);
  std::fill(rhs.v.begin(), rhs.v.end(), 2.0 * phi);
  return solve_forward(grid, fn, rhs, settings);
}

ScalarField apply_operator(const ScalarField& u, const PlasticityFn& fn) {
  const GridSpec& g = u.grid;
  const FaceCoeffs fc = half_point_coeffs(frozen_coefficients(u, fn));
  const double ax = 1.0 / (g.dx() * g.dx());
  const double ay = 1.0 / (g.dy() * g.dy());
  ScalarField out(g);
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 1; i < g.nx; ++i) {
      const std::size_t k = u.idx(i, j);
      out(i, j) = fc.east[k] * (u(i, j) - u(i + 1, j)) * ax +
                  fc.west[k] * (u(i, j) - u(i - 1, j)) * ax +
                  fc.north[k] * (u(i, j) - u(i, j + 1)) * ay +
                  fc.south[k] * (u(i, j) - u(i, j - 1)) * ay;
    }
  }
  return out;
}

double max_grad_sq(const ScalarField& u) {
  const ScalarField gs = gradient_sq(u);
  return *std::max_element(gs.v.begin(), gs.v.end());
}

Deformation classify_measurement(double m, double yield_sq) {
  return m > yield_sq ? Deformation::Plastic : Deformation::Elastic;
}

std::string to_string(Deformation d) {
  return d == Deformation::Plastic ? "plastic" : "elastic";
}

}  // namespace torsion
