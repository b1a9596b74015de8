#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace torsion {

// Uniform tensor grid on [0,lx] x [0,ly] with nx*ny cells, so (nx+1)*(ny+1)
// nodes including the boundary. Node (i,j) sits at (x(i), y(j)).
struct GridSpec {
  double lx = 1.0;
  double ly = 1.0;
  int nx = 2;
  int ny = 2;

  double dx() const { return lx / nx; }
  double dy() const { return ly / ny; }
  // lx*(i/nx) rather than i*dx so that x(nx) == lx exactly.
  double x(int i) const { return lx * (static_cast<double>(i) / nx); }
  double y(int j) const { return ly * (static_cast<double>(j) / ny); }
  std::size_t npoints() const {
    return static_cast<std::size_t>(nx + 1) * (ny + 1);
  }

  bool operator==(const GridSpec&) const = default;
};

// Throws std::invalid_argument unless lx,ly > 0 and nx,ny >= 2.
void validate(const GridSpec& grid);

// Nodal values stored row-major: index = j*(nx+1) + i.
struct ScalarField {
  GridSpec grid;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& g)
      : grid(g), v(g.npoints(), 0.0) {}

  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(j) * (grid.nx + 1) + i;
  }
  double& at(int i, int j) { return v[idx(i, j)]; }
  double at(int i, int j) const { return v[idx(i, j)]; }
  double& operator()(int i, int j) { return v[idx(i, j)]; }
  double operator()(int i, int j) const { return v[idx(i, j)]; }
};

// Samples f at every node. Throws std::invalid_argument naming the node if f
// returns a non-finite value.
ScalarField make_field(const GridSpec& grid,
                       const std::function<double(double, double)>& f);

// Nodewise |grad u|^2: central differences at interior nodes, one-sided
// first-order forward/backward differences on the boundary.
ScalarField gradient_sq(const ScalarField& u);

// Trapezoidal rule over the full rectangle.
double integrate(const ScalarField& u);

// Torque functional: 2 * integral of u.
double torque(const ScalarField& u);

// sqrt( integral(u^2) + integral(|grad u|^2) ), both via integrate().
double h1_norm(const ScalarField& u);

// max_ij |a_ij - b_ij|. Throws std::invalid_argument on grid mismatch.
double linf_diff(const ScalarField& a, const ScalarField& b);

// CSV layout: header "x,y,value", one row per node, j outer / i inner,
// values printed with %.17g so a round trip is bit-exact.
void to_csv(const ScalarField& u, std::ostream& out);
ScalarField field_from_csv(std::istream& in);

void write_csv(const ScalarField& u, const std::string& path);
ScalarField read_csv_field(const std::string& path);

}  // namespace torsion
