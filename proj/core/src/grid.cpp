#include "torsion/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace torsion {

void validate(const GridSpec& grid) {
  if (!(grid.lx > 0.0) || !std::isfinite(grid.lx) || !(grid.ly > 0.0) ||
      !std::isfinite(grid.ly)) {
    throw std::invalid_argument("grid: side lengths must be positive finite, got lx=" +
                                std::to_string(grid.lx) + " ly=" +
                                std::to_string(grid.ly));
  }
  if (grid.nx < 2 || grid.ny < 2) {
    throw std::invalid_argument("grid: need at least 2 cells per direction, got nx=" +
                                std::to_string(grid.nx) + " ny=" +
                                std::to_string(grid.ny));
  }
}

ScalarField make_field(const GridSpec& grid,
                       const std::function<double(double, double)>& f) {
  validate(grid);
  ScalarField u(grid);
  for (int j = 0; j <= grid.ny; ++j) {
    for (int i = 0; i <= grid.nx; ++i) {
      double val = f(grid.x(i), grid.y(j));
      if (!std::isfinite(val)) {
        throw std::invalid_argument("make_field: non-finite value at node (" +
                                    std::to_string(i) + "," + std::to_string(j) +
                                    ")");
      }
      u(i, j) = val;
    }
  }
  return u;
}

ScalarField gradient_sq(const ScalarField& u) {
  const GridSpec& g = u.grid;
  validate(g);
  if (u.v.size() != g.npoints()) {
    throw std::invalid_argument("gradient_sq: field size does not match grid");
  }
  const double dx = g.dx(), dy = g.dy();
  ScalarField out(g);
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) {
      double ux;
      if (i == 0) {
        ux = (u(1, j) - u(0, j)) / dx;
      } else if (i == g.nx) {
        ux = (u(g.nx, j) - u(g.nx - 1, j)) / dx;
      } else {
        ux = (u(i + 1, j) - u(i - 1, j)) / (2.0 * dx);
      }
      double uy;
      if (j == 0) {
        uy = (u(i, 1) - u(i, 0)) / dy;
      } else if (j == g.ny) {
        uy = (u(i, g.ny) - u(i, g.ny - 1)) / dy;
      } else {
        uy = (u(i, j + 1) - u(i, j - 1)) / (2.0 * dy);
      }
      out(i, j) = ux * ux + uy * uy;
    }
  }
  return out;
}

double integrate(const ScalarField& u) {
  const GridSpec& g = u.grid;
  validate(g);
  if (u.v.size() != g.npoints()) {
    throw std::invalid_argument("integrate: field size does not match grid");
  }
  double sum = 0.0;
  for (int j = 0; j <= g.ny; ++j) {
    const double wy = (j == 0 || j == g.ny) ? 0.5 : 1.0;
    for (int i = 0; i <= g.nx; ++i) {
      const double wx = (i == 0 || i == g.nx) ? 0.5 : 1.0;
      sum += wx * wy * u(i, j);
    }
  }
  return sum * g.dx() * g.dy();
}

double torque(const ScalarField& u) { return 2.0 * integrate(u); }

double h1_norm(const ScalarField& u) {
  ScalarField sq(u.grid);
  for (std::size_t k = 0; k < u.v.size(); ++k) sq.v[k] = u.v[k] * u.v[k];
  return std::sqrt(integrate(sq) + integrate(gradient_sq(u)));
}

double linf_diff(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid == b.grid)) {
    throw std::invalid_argument("linf_diff: fields live on different grids");
  }
  double m = 0.0;
  for (std::size_t k = 0; k < a.v.size(); ++k) {
    m = std::max(m, std::abs(a.v[k] - b.v[k]));
  }
  return m;
}

namespace {

void print_g17(std::ostream& out, double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  out << buf;
}

}  // namespace

void to_csv(const ScalarField& u, std::ostream& out) {
  const GridSpec& g = u.grid;
  validate(g);
  if (u.v.size() != g.npoints()) {
    throw std::invalid_argument("to_csv: field size does not match grid");
  }
  out << "x,y,value\n";
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) {
      print_g17(out, g.x(i));
      out << ',';
      print_g17(out, g.y(j));
      out << ',';
      print_g17(out, u(i, j));
      out << '\n';
    }
  }
}

ScalarField field_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "x,y,value") {
    throw std::invalid_argument("field csv: expected header \"x,y,value\"");
  }
  std::vector<double> xs, ys, vs;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    double x, y, v;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &v) != 3) {
      throw std::invalid_argument("field csv: malformed row " +
                                  std::to_string(row));
    }
    xs.push_back(x);
    ys.push_back(y);
    vs.push_back(v);
  }
  if (vs.empty()) throw std::invalid_argument("field csv: no data rows");

  // Rows come j-outer / i-inner: the first block shares y, its length is nx+1.
  std::size_t nxp = 0;
  while (nxp < ys.size() && ys[nxp] == ys[0]) ++nxp;
  if (nxp < 3 || vs.size() % nxp != 0) {
    throw std::invalid_argument("field csv: rows do not form a grid");
  }
  std::size_t nyp = vs.size() / nxp;
  GridSpec g;
  g.nx = static_cast<int>(nxp) - 1;
  g.ny = static_cast<int>(nyp) - 1;
  g.lx = xs[nxp - 1];
  g.ly = ys.back();
  validate(g);

  ScalarField u(g);
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) {
      std::size_t k = static_cast<std::size_t>(j) * nxp + i;
      if (xs[k] != g.x(i) || ys[k] != g.y(j)) {
        throw std::invalid_argument("field csv: node " + std::to_string(k + 1) +
                                    " is off the uniform grid");
      }
      u(i, j) = vs[k];
    }
  }
  return u;
}

void write_csv(const ScalarField& u, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  to_csv(u, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

ScalarField read_csv_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return field_from_csv(in);
}

}  // namespace torsion
