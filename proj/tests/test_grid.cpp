#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "torsion/grid.hpp"

using namespace torsion;

namespace {

ScalarField poly_bubble(const GridSpec& g) {
  // (x - x^2)(y - y^2): zero on the boundary of the unit square.
  return make_field(g, [](double x, double y) {
    return (x - x * x) * (y - y * y);
  });
}

}  // namespace

TEST_CASE("grid coordinates hit the endpoints exactly") {
  GridSpec g{1.0, 1.0, 50, 40};
  CHECK(g.x(0) == 0.0);
  CHECK(g.x(50) == 1.0);
  CHECK(g.y(40) == 1.0);
  CHECK(g.npoints() == 51u * 41u);
  GridSpec h{0.3, 2.7, 7, 9};
  CHECK(h.x(7) == 0.3);
  CHECK(h.y(9) == 2.7);
}

TEST_CASE("grid validation rejects degenerate inputs") {
  CHECK_THROWS_AS(validate(GridSpec{0.0, 1.0, 4, 4}), std::invalid_argument);
  CHECK_THROWS_AS(validate(GridSpec{1.0, -1.0, 4, 4}), std::invalid_argument);
  CHECK_THROWS_AS(validate(GridSpec{1.0, 1.0, 1, 4}), std::invalid_argument);
  CHECK_THROWS_AS(validate(GridSpec{1.0, 1.0, 4, 0}), std::invalid_argument);
  CHECK_NOTHROW(validate(GridSpec{1.0, 1.0, 2, 2}));
}

TEST_CASE("make_field samples nodes and flags non-finite values") {
  GridSpec g{1.0, 1.0, 4, 4};
  ScalarField u = make_field(g, [](double x, double y) { return x + 2 * y; });
  CHECK(u(0, 0) == 0.0);
  CHECK(u(4, 0) == 1.0);
  CHECK(u(2, 2) == doctest::Approx(1.5));
  CHECK(u.v.size() == g.npoints());

  bool threw = false;
  try {
    make_field(g, [](double x, double y) {
      return (x > 0.9 && y > 0.9) ? std::nan("") : 0.0;
    });
  } catch (const std::invalid_argument& e) {
    threw = true;
    CHECK(std::string(e.what()).find("(4,4)") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("gradient_sq is exact for affine fields") {
  GridSpec g{1.0, 1.0, 8, 6};
  ScalarField u = make_field(g, [](double x, double y) { return 2 * x + 3 * y; });
  ScalarField gs = gradient_sq(u);
  for (double s : gs.v) CHECK(s == doctest::Approx(13.0).epsilon(1e-12));
}

TEST_CASE("gradient_sq maximum converges to the continuum value") {
  // For (x-x^2)(y-y^2) the squared gradient peaks at 1/16 on the edge
  // midpoints; the one-sided boundary stencil is first order, so halving h
  // should at least halve the error.
  auto max_gs = [](int n) {
    GridSpec g{1.0, 1.0, n, n};
    ScalarField gs = gradient_sq(poly_bubble(g));
    double m = 0.0;
    for (double s : gs.v) m = std::max(m, s);
    return m;
  };
  const double e50 = std::abs(max_gs(50) - 0.0625);
  const double e200 = std::abs(max_gs(200) - 0.0625);
  CHECK(e50 < 3e-3);
  CHECK(e200 < 0.55 * e50);
}

TEST_CASE("trapezoid integration matches the closed form for the bubble") {
  // Composite trapezoid of x - x^2 on n cells is exactly 1/6 - h^2/6, and the
  // rule factorizes over tensor products.
  for (int n : {10, 50}) {
    GridSpec g{1.0, 1.0, n, n};
    const double h = g.dx();
    const double oned = 1.0 / 6.0 - h * h / 6.0;
    CHECK(integrate(poly_bubble(g)) ==
          doctest::Approx(oned * oned).epsilon(1e-12));
    CHECK(torque(poly_bubble(g)) ==
          doctest::Approx(2.0 * oned * oned).epsilon(1e-12));
  }
}

TEST_CASE("integrate of a constant gives the rectangle area") {
  GridSpec g{0.5, 2.0, 9, 13};
  ScalarField u = make_field(g, [](double, double) { return 3.0; });
  CHECK(integrate(u) == doctest::Approx(3.0 * 0.5 * 2.0).epsilon(1e-13));
}

TEST_CASE("h1_norm approaches the analytic norm of the bubble") {
  // sqrt(integral u^2 + integral |grad u|^2) = sqrt(1/900 + 1/45).
  GridSpec g{1.0, 1.0, 50, 50};
  const double exact = std::sqrt(7.0 / 300.0);
  CHECK(h1_norm(poly_bubble(g)) == doctest::Approx(exact).epsilon(0.01));
}

TEST_CASE("linf_diff requires matching grids") {
  GridSpec a{1.0, 1.0, 4, 4}, b{1.0, 1.0, 5, 4};
  ScalarField ua(a), ub(b);
  CHECK_THROWS_AS(linf_diff(ua, ub), std::invalid_argument);
  ScalarField uc(a);
  uc(2, 2) = 0.25;
  CHECK(linf_diff(ua, uc) == 0.25);
}

TEST_CASE("csv round trip is bit exact") {
  GridSpec g{1.0, 1.0, 7, 5};
  ScalarField u = make_field(g, [](double x, double y) {
    return std::sin(3.0 * x) + x * x * std::cos(2.0 * y) + 1e-9 * x;
  });
  std::ostringstream out;
  to_csv(u, out);
  std::istringstream in(out.str());
  ScalarField back = field_from_csv(in);
  CHECK(back.grid == u.grid);
  REQUIRE(back.v.size() == u.v.size());
  for (std::size_t k = 0; k < u.v.size(); ++k) CHECK(back.v[k] == u.v[k]);
}

TEST_CASE("csv file round trip") {
  GridSpec g{2.0, 1.0, 6, 4};
  ScalarField u = make_field(g, [](double x, double y) { return x * y + 0.1; });
  const std::string path = "round_trip_field.csv";
  write_csv(u, path);
  ScalarField back = read_csv_field(path);
  CHECK(back.grid == u.grid);
  CHECK(back.v == u.v);
  std::remove(path.c_str());
}

TEST_CASE("csv reader rejects malformed input") {
  {
    std::istringstream in("a,b,c\n0,0,1\n");
    CHECK_THROWS_AS(field_from_csv(in), std::invalid_argument);
  }
  {
    std::istringstream in("x,y,value\n0,0,not_a_number\n");
    CHECK_THROWS_AS(field_from_csv(in), std::invalid_argument);
  }
  {
    // Truncated grid: 3 + 2 rows cannot tile (nx+1) x (ny+1).
    std::istringstream in(
        "x,y,value\n0,0,1\n0.5,0,1\n1,0,1\n0,1,1\n0.5,1,1\n");
    CHECK_THROWS_AS(field_from_csv(in), std::invalid_argument);
  }
}
