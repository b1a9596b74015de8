#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "torsion/grid.hpp"
#include "torsion/plasticity.hpp"

namespace torsion {

// Face-centered diffusion coefficients obtained by averaging the nodal
// values: east(i,j) = (gn(i,j) + gn(i+1,j)) / 2 and so on. Stored per node;
// entries whose face lies outside the grid are unused.
struct FaceCoeffs {
  GridSpec grid;
  std::vector<double> east, west, north, south;
};

// g_node must be positive and finite at every node; throws
// std::invalid_argument naming the offending node otherwise.
FaceCoeffs half_point_coeffs(const ScalarField& g_node);

// Pentadiagonal system over interior nodes only (homogeneous Dirichlet
// boundary eliminated). Off-diagonal entries are stored WITH their sign,
// so apply() is diag*x + east*x_E + ....
struct LinearSystem {
  GridSpec grid;
  int nxi = 0;  // interior nodes per row, nx-1
  int nyi = 0;  // interior rows, ny-1
  std::vector<double> diag, east, west, north, south;
  std::vector<double> rhs;

  std::size_t index(int ii, int jj) const {
    return static_cast<std::size_t>(jj) * nxi + ii;
  }
  std::size_t size() const {
    return static_cast<std::size_t>(nxi) * nyi;
  }
  // y = A x.
  void apply(const std::vector<double>& x, std::vector<double>& y) const;
};

// Five-point scheme: for interior node (i,j),
//   [gE(u_ij - u_E)/dx^2 + gW(u_ij - u_W)/dx^2
//  + gN(u_ij - u_N)/dy^2 + gS(u_ij - u_S)/dy^2] = rhs_ij.
LinearSystem assemble(const FaceCoeffs& fc, const ScalarField& rhs);

struct SolverError : std::runtime_error {
  double rel_residual;
  int iterations;
  SolverError(const std::string& msg, double rel, int iters)
      : std::runtime_error(msg), rel_residual(rel), iterations(iters) {}
};

struct LinearStats {
  int iterations = 0;
  double rel_residual = 0.0;
};

// Jacobi-preconditioned conjugate gradients. tol is relative to |b|;
// b = 0 returns the zero vector. max_iter == 0 means 10 * unknowns.
// x0, when given, seeds the iteration (same length as the system).
// Throws SolverError if the iteration cap is hit.
std::vector<double> solve_linear(const LinearSystem& ls, double tol = 1e-10,
                                 int max_iter = 0,
                                 const std::vector<double>* x0 = nullptr,
                                 LinearStats* stats = nullptr);

// One linearized solve: freeze g at |grad u_prev|^2, assemble, solve, embed
// back into a full field with zero boundary. x0/stats as in solve_linear.
ScalarField solve_linearized(const ScalarField& u_prev,
                             const PlasticityFn& fn, const ScalarField& rhs,
                             double linear_tol = 1e-10,
                             int linear_max_iter = 0,
                             const std::vector<double>* x0 = nullptr,
                             LinearStats* stats = nullptr);

struct ForwardSettings {
  double tol = 1e-6;        // H1 distance between successive iterates
  int max_iter = 200;       // fixed-point iteration cap
  double linear_tol = 1e-10;
  int linear_max_iter = 0;  // 0 = solver default
};

struct ForwardResult {
  ScalarField u_star;
  int iterations = 0;                // linearized solves performed
  std::vector<double> diff_history;  // H1 distance after each solve
  bool converged = false;
};

// Fixed-point iteration for -div(g(|grad u|^2) grad u) = rhs, u = 0 on the
// boundary, starting from u == 0. Hitting max_iter yields converged=false,
// not an exception; linear-solve failures propagate as SolverError.
ForwardResult solve_forward(const GridSpec& grid, const PlasticityFn& fn,
                            const ScalarField& rhs,
                            const ForwardSettings& settings = {});

// Convenience overload with constant right-hand side 2*phi.
ForwardResult solve_forward(const GridSpec& grid, const PlasticityFn& fn,
                            double phi, const ForwardSettings& settings = {});

// Discrete operator -div(g(|grad u|^2) grad u) applied to nodal values of u;
// zero outside the interior. Used to manufacture right-hand sides whose
// exact discrete solution is u itself.
ScalarField apply_operator(const ScalarField& u, const PlasticityFn& fn);

// Largest nodal |grad u|^2 over the whole grid.
double max_grad_sq(const ScalarField& u);

enum class Deformation { Elastic, Plastic };

// Plastic iff m exceeds the yield threshold strictly; a tie is elastic.
Deformation classify_measurement(double m, double yield_sq);

// "elastic" / "plastic".
std::string to_string(Deformation d);

}  // namespace torsion
