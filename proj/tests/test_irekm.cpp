#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "torsion/irekm.hpp"
#include "torsion/rng.hpp"

using namespace torsion;

namespace {

const GridSpec kTinyGrid{1.0, 1.0, 10, 10};
const MaterialParams kTruth{0.3, 0.02, 42.3};

PriorSpec soft_prior() {
  return PriorSpec{{0.2, 0.9}, {0.0, 0.15}, {42.0, 43.0}};
}

std::vector<std::vector<double>> densify(const Matrix& m) {
  std::vector<std::vector<double>> a(m.n, std::vector<double>(m.n));
  for (int r = 0; r < m.n; ++r) {
    for (int c = 0; c < m.n; ++c) a[r][c] = m.at(r, c);
  }
  return a;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("prior validation and clamp box") {
  CHECK_NOTHROW(validate(soft_prior()));
  PriorSpec bad = soft_prior();
  bad.kappa = {0.9, 0.2};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = soft_prior();
  bad.kappa = {-0.1, 0.9};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = soft_prior();
  bad.shear_modulus = {-1.0, 43.0};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = soft_prior();
  bad.yield_sq = {-0.5, 0.15};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  const ParamBox box = clamp_box(soft_prior());
  CHECK(box.yield_sq.lo == 1e-6);  // raised from 0
  CHECK(box.yield_sq.hi == 0.15);
  CHECK(box.kappa.lo == 0.2);
}

TEST_CASE("initial ensemble is deterministic and inside the prior box") {
  const Ensemble ens = init_ensemble(soft_prior(), 50, 7);
  REQUIRE(ens.members.size() == 50u);
  for (const auto& p : ens.members) {
    CHECK(p.kappa >= 0.2);
    CHECK(p.kappa <= 0.9);
    CHECK(p.yield_stress >= 1e-6);
    CHECK(p.yield_stress <= 0.15);
    CHECK(p.shear_modulus >= 42.0);
    CHECK(p.shear_modulus <= 43.0);
  }
  const Ensemble again = init_ensemble(soft_prior(), 50, 7);
  CHECK(again.members == ens.members);
  const Ensemble other = init_ensemble(soft_prior(), 50, 8);
  CHECK(other.members != ens.members);
  // Members are not all identical.
  CHECK(ens.members[0].kappa != ens.members[1].kappa);
  CHECK_THROWS_AS(init_ensemble(soft_prior(), 1, 7), std::invalid_argument);
}

TEST_CASE("covariance statistics match the double-loop oracle") {
  const int ne = 7, m = 3;
  Ensemble ens;
  Predictions w(ne, std::vector<double>(m));
  for (int j = 0; j < ne; ++j) {
    ens.members.push_back(MaterialParams{
        uniform01(11, Role::PriorInit, j, 0),
        uniform01(11, Role::PriorInit, j, 1) + 0.01,
        42.0 + uniform01(11, Role::PriorInit, j, 2)});
    for (int i = 0; i < m; ++i) {
      w[j][i] = 5.0 * uniform01(12, Role::PriorInit, j, 10 + i);
    }
  }
  const KalmanStats s = ensemble_stats(ens, w);

  std::vector<std::vector<double>> cols(m, std::vector<double>(ne));
  std::vector<double> kappas(ne), yields(ne), shears(ne);
  for (int j = 0; j < ne; ++j) {
    kappas[j] = ens.members[j].kappa;
    yields[j] = ens.members[j].yield_stress;
    shears[j] = ens.members[j].shear_modulus;
    for (int i = 0; i < m; ++i) cols[i][j] = w[j][i];
  }
  for (int i = 0; i < m; ++i) {
    double mean = 0.0;
    for (int j = 0; j < ne; ++j) mean += w[j][i];
    CHECK(std::abs(s.w_mean[i] - mean / ne) <= 1e-12);
    CHECK(std::abs(s.c_kw[i] - oracles::covariance(kappas, cols[i])) <= 1e-12);
    CHECK(std::abs(s.c_yw[i] - oracles::covariance(yields, cols[i])) <= 1e-12);
    CHECK(std::abs(s.c_gw[i] - oracles::covariance(shears, cols[i])) <= 1e-12);
    for (int k = 0; k < m; ++k) {
      CHECK(std::abs(s.c_ww.at(i, k) - oracles::covariance(cols[i], cols[k])) <=
            1e-12);
      CHECK(s.c_ww.at(i, k) == s.c_ww.at(k, i));
    }
  }
}

TEST_CASE("spd solve matches dense elimination") {
  Matrix a(3);
  // B^T B + I for a fixed B.
  const double b[3][3] = {{0.3, -1.2, 0.5}, {2.0, 0.1, -0.4}, {0.7, 0.9, 1.1}};
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) {
      double s = (i == k) ? 1.0 : 0.0;
      for (int r = 0; r < 3; ++r) s += b[r][i] * b[r][k];
      a.at(i, k) = s;
    }
  }
  const std::vector<double> rhs{1.0, -2.0, 0.5};
  const auto x = solve_spd(a, rhs);
  const auto ref = oracles::dense_solve(densify(a), rhs);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(x[i] - ref[i]) <= 1e-12);

  Matrix indef(2);
  indef.at(0, 0) = 1.0;
  indef.at(1, 1) = -1.0;
  CHECK_THROWS_AS(solve_spd(indef, {1.0, 1.0}), std::runtime_error);
}

TEST_CASE("gamma selection: scalar case by hand") {
  // c_ww = 1, sigma = 1, misfit = 1, rho = 0.5: the crossing condition is
  // gamma/(1+gamma) >= 1/2, first satisfied at gamma = 1.
  Matrix c(1);
  c.at(0, 0) = 1.0;
  const std::vector<double> d{2.0}, w{1.0};

  GammaChoice g = select_gamma(c, d, w, 1.0, 0.5, 1.0);
  CHECK(g.gamma == 1.0);
  CHECK(g.doublings == 0);

  g = select_gamma(c, d, w, 1.0, 0.5, 0.25);
  CHECK(g.gamma == 1.0);
  CHECK(g.doublings == 2);
}

TEST_CASE("gamma selection: first crossing on random instances") {
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + (mix(900, Role::PriorInit, trial, 0) % 2);  // 2 or 3
    Matrix c(m);
    std::vector<std::vector<double>> b(m, std::vector<double>(m));
    for (int r = 0; r < m; ++r) {
      for (int k = 0; k < m; ++k) {
        b[r][k] = 2.0 * uniform01(901, Role::PriorInit, trial, 10 * r + k) - 1.0;
      }
    }
    for (int i = 0; i < m; ++i) {
      for (int k = 0; k < m; ++k) {
        double s = 0.0;
        for (int r = 0; r < m; ++r) s += b[r][i] * b[r][k];
        c.at(i, k) = s;
      }
    }
    std::vector<double> d(m), w(m, 0.0);
    for (int i = 0; i < m; ++i) {
      d[i] = 2.0 * uniform01(902, Role::PriorInit, trial, i) - 1.0;
    }
    const double sigma = 0.05 + 0.45 * uniform01(903, Role::PriorInit, trial, 0);
    const double rho = 0.3 + 0.6 * uniform01(904, Role::PriorInit, trial, 0);
    const double gamma0 = 0.1 + 1.9 * uniform01(905, Role::PriorInit, trial, 0);

    const GammaChoice g = select_gamma(c, d, w, sigma, rho, gamma0);
    CHECK(g.gamma == doctest::Approx(gamma0 * std::pow(2.0, g.doublings)));

    // Oracle form of the crossing test at a given gamma.
    auto crosses = [&](double gamma) {
      auto a = densify(c);
      for (int i = 0; i < m; ++i) a[i][i] += gamma * sigma * sigma;
      const auto z = oracles::dense_solve(a, d);
      return gamma * norm2(z) / sigma >= rho * norm2(d) / (sigma * sigma);
    };
    CHECK(crosses(g.gamma));
    double gm = gamma0;
    for (int i = 0; i < g.doublings; ++i, gm *= 2.0) CHECK(!crosses(gm));
  }
}

TEST_CASE("gamma selection edge cases") {
  Matrix c(2);
  c.at(0, 0) = c.at(1, 1) = 1.0;
  // Zero residual short-circuits.
  GammaChoice g = select_gamma(c, {1.0, 2.0}, {1.0, 2.0}, 0.5, 0.7, 3.0);
  CHECK(g.gamma == 3.0);
  CHECK(g.doublings == 0);
  // sigma > 1/rho makes the crossing unreachable: the doubling cap trips.
  CHECK_THROWS_AS(select_gamma(c, {1.0, 0.0}, {0.0, 0.0}, 2.0, 0.9, 1.0, 40),
                  std::runtime_error);
  CHECK_THROWS_AS(select_gamma(c, {1.0}, {0.0}, 1.0, 0.7, 1.0),
                  std::invalid_argument);  // size mismatch
  CHECK_THROWS_AS(select_gamma(c, {1.0, 0.0}, {0.0, 0.0}, 0.0, 0.7, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(select_gamma(c, {1.0, 0.0}, {0.0, 0.0}, 1.0, 1.5, 1.0),
                  std::invalid_argument);
}

TEST_CASE("ensemble update matches the dense-oracle formula") {
  const int ne = 3, m = 2;
  Ensemble ens;
  ens.members = {MaterialParams{0.30, 0.020, 42.2},
                 MaterialParams{0.55, 0.060, 42.6},
                 MaterialParams{0.80, 0.110, 42.9}};
  Predictions w{{1.0, 0.2}, {1.4, 0.35}, {2.1, 0.5}};
  std::vector<std::vector<double>> d_pert{{1.5, 0.3}, {1.6, 0.28}, {1.4, 0.33}};
  const double gamma = 2.0, sigma = 0.5;
  const KalmanStats s = ensemble_stats(ens, w);

  ParamBox wide{{-1e9, 1e9}, {-1e9, 1e9}, {-1e9, 1e9}};
  Ensemble updated = ens;
  update_ensemble(updated, w, s, d_pert, gamma, sigma, wide);

  auto a = densify(s.c_ww);
  for (int i = 0; i < m; ++i) a[i][i] += gamma * sigma * sigma;
  for (int j = 0; j < ne; ++j) {
    std::vector<double> misfit(m);
    for (int i = 0; i < m; ++i) misfit[i] = d_pert[j][i] - w[j][i];
    const auto z = oracles::dense_solve(a, misfit);
    double dk = 0.0, dy = 0.0, dg = 0.0;
    for (int i = 0; i < m; ++i) {
      dk += s.c_kw[i] * z[i];
      dy += s.c_yw[i] * z[i];
      dg += s.c_gw[i] * z[i];
    }
    CHECK(std::abs(updated.members[j].kappa - (ens.members[j].kappa + dk)) <=
          1e-12);
    CHECK(std::abs(updated.members[j].yield_stress -
                   (ens.members[j].yield_stress + dy)) <= 1e-12);
    CHECK(std::abs(updated.members[j].shear_modulus -
                   (ens.members[j].shear_modulus + dg)) <= 1e-12);
  }

  // A tight box clamps every component.
  ParamBox tight{{0.5, 0.5}, {0.05, 0.05}, {42.5, 42.5}};
  Ensemble clamped = ens;
  update_ensemble(clamped, w, s, d_pert, gamma, sigma, tight);
  for (const auto& p : clamped.members) {
    CHECK(p.kappa == 0.5);
    CHECK(p.yield_stress == 0.05);
    CHECK(p.shear_modulus == 42.5);
  }
}

TEST_CASE("residual and relative errors match hand values") {
  CHECK(residual({3.0, 4.0}, {0.0, 0.0}, 2.5) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(residual({1.0}, {0.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(residual({1.0}, {0.0, 1.0}, 1.0), std::invalid_argument);

  const RelErrors e = relative_errors(MaterialParams{0.33, 0.022, 42.3},
                                      MaterialParams{0.3, 0.02, 42.3});
  CHECK(std::abs(e.e_kappa - 0.1) <= 1e-12);
  CHECK(std::abs(e.e_yield - 0.1) <= 1e-12);
  CHECK(e.e_shear == 0.0);
  const double expect_total = std::sqrt(0.03 * 0.03 + 0.002 * 0.002) /
                              std::sqrt(0.3 * 0.3 + 0.02 * 0.02 + 42.3 * 42.3);
  CHECK(std::abs(e.e_total - expect_total) <= 1e-12);
  CHECK_THROWS_AS(
      relative_errors(MaterialParams{0.3, 0.02, 42.3}, MaterialParams{0.0, 0.02, 42.3}),
      std::invalid_argument);
}

TEST_CASE("noise level: truth-free data falls back to sqrt(M)") {
  ObservationSet data;
  data.angles.phi = {1.0, 0.5, 0.1, 0.005};
  data.d = {1.0, 0.5, 0.1, 0.01};
  data.sigma = 0.1;
  CHECK(noise_level(data, kTinyGrid) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("noise level: synthetic data measures its own whitened noise") {
  AngleSet angles{{0.5, 0.05}};
  const double sigma = 1e-3;
  ObservationSet data = generate_data(MaterialParams{1.0, 0.02, 42.3}, angles,
                                      sigma, 31, kTinyGrid);
  const auto clean = observe(*data.truth, angles, kTinyGrid);
  double expect = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double z = (data.d[i] - clean[i]) / sigma;
    expect += z * z;
  }
  expect = std::sqrt(expect);
  CHECK(noise_level(data, kTinyGrid) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("inversion recovers a soft-material truth on a coarse grid") {
  AngleSet angles{{1.0, 0.005}};
  ObservationSet data = generate_data(kTruth, angles, 1e-3, 2024, kTinyGrid);

  IrekmSettings st;
  st.n_members = 30;
  st.seed = 5;
  st.max_iter = 40;
  const InversionTrace trace = run_irekm(soft_prior(), data, kTinyGrid, st);

  CHECK(trace.stop_reason == StopReason::Discrepancy);
  CHECK(trace.iterations <= 40);
  REQUIRE(trace.records.size() == static_cast<std::size_t>(trace.iterations) + 1);
  CHECK(trace.tau == doctest::Approx(1.0 / 0.7).epsilon(1e-14));
  CHECK(trace.records.back().residual <= trace.tau * trace.delta);

  // Every record's residual is recomputable from its stored mean prediction.
  for (const auto& rec : trace.records) {
    CHECK(rec.residual == residual(data.d, rec.w_mean, data.sigma));
    REQUIRE(rec.errors.has_value());
    CHECK(rec.spread.kappa >= 0.0);
  }
  // gamma is recorded on every stepping record and absent on the last.
  for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
    CHECK(trace.records[k].gamma.has_value());
    CHECK(*trace.records[k].gamma_doublings >= 0);
  }
  CHECK(!trace.records.back().gamma.has_value());

  // Loose recovery bound; the acceptance runs tighten this.
  CHECK(trace.records.back().errors->e_total < 0.05);
  CHECK(trace.theta_final.kappa > 0.2);
  CHECK(trace.theta_final.kappa < 0.9);
}

TEST_CASE("inversion trace is independent of the job count") {
  AngleSet angles{{1.0, 0.005}};
  ObservationSet data = generate_data(kTruth, angles, 1e-3, 2024, kTinyGrid);
  IrekmSettings st;
  st.n_members = 12;
  st.seed = 9;
  st.max_iter = 15;
  IrekmSettings st3 = st;
  st3.jobs = 3;
  const InversionTrace a = run_irekm(soft_prior(), data, kTinyGrid, st);
  const InversionTrace b = run_irekm(soft_prior(), data, kTinyGrid, st3);
  CHECK(trace_to_jsonl(a) == trace_to_jsonl(b));
  CHECK(trace_to_csv(a) == trace_to_csv(b));
  CHECK(trace_summary_json(a) == trace_summary_json(b));
}

TEST_CASE("inversion honors the iteration cap") {
  AngleSet angles{{1.0, 0.005}};
  ObservationSet data = generate_data(kTruth, angles, 1e-8, 2024, kTinyGrid);
  IrekmSettings st;
  st.n_members = 10;
  st.seed = 3;
  st.max_iter = 1;
  const InversionTrace trace = run_irekm(soft_prior(), data, kTinyGrid, st);
  CHECK(trace.stop_reason == StopReason::MaxIterations);
  CHECK(trace.iterations == 1);
  CHECK(trace.records.size() == 2u);
  CHECK(to_string(trace.stop_reason) == "max-iter");
  CHECK(to_string(StopReason::Discrepancy) == "discrepancy");
}

TEST_CASE("a huge delta override stops before any update") {
  AngleSet angles{{1.0}};
  ObservationSet data = generate_data(kTruth, angles, 1e-3, 2024, kTinyGrid);
  IrekmSettings st;
  st.n_members = 8;
  st.seed = 3;
  st.delta_override = 1e9;
  const InversionTrace trace = run_irekm(soft_prior(), data, kTinyGrid, st);
  CHECK(trace.stop_reason == StopReason::Discrepancy);
  CHECK(trace.iterations == 0);
  CHECK(trace.records.size() == 1u);
  CHECK(!trace.records[0].gamma.has_value());
}

TEST_CASE("inversion settings are validated") {
  AngleSet angles{{1.0}};
  ObservationSet data;
  data.angles = angles;
  data.d = {0.8};
  data.sigma = 0.0;
  IrekmSettings st;
  st.n_members = 8;
  CHECK_THROWS_AS(run_irekm(soft_prior(), data, kTinyGrid, st),
                  std::invalid_argument);  // sigma must be positive
  data.sigma = 1e-3;
  IrekmSettings bad = st;
  bad.rho = 1.0;
  CHECK_THROWS_AS(run_irekm(soft_prior(), data, kTinyGrid, bad),
                  std::invalid_argument);
  bad = st;
  bad.n_members = 1;
  CHECK_THROWS_AS(run_irekm(soft_prior(), data, kTinyGrid, bad),
                  std::invalid_argument);
  bad = st;
  bad.tau = 0.0;
  CHECK_THROWS_AS(run_irekm(soft_prior(), data, kTinyGrid, bad),
                  std::invalid_argument);
  bad = st;
  bad.gamma0 = 0.0;
  CHECK_THROWS_AS(run_irekm(soft_prior(), data, kTinyGrid, bad),
                  std::invalid_argument);
  bad = st;
  bad.max_iter = 0;
  CHECK_THROWS_AS(run_irekm(soft_prior(), data, kTinyGrid, bad),
                  std::invalid_argument);
}

TEST_CASE("trace serializations carry the documented layout") {
  AngleSet angles{{1.0, 0.005}};
  ObservationSet data = generate_data(kTruth, angles, 1e-3, 2024, kTinyGrid);
  IrekmSettings st;
  st.n_members = 12;
  st.seed = 9;
  st.max_iter = 25;
  const InversionTrace trace = run_irekm(soft_prior(), data, kTinyGrid, st);

  const std::string csv = trace_to_csv(trace);
  std::istringstream lines(csv);
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line == "n,e_kappa,e_xi,e_G,e_n,R_n,gamma_n");
  std::size_t rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == trace.records.size());

  const std::string jsonl = trace_to_jsonl(trace);
  std::istringstream jl(jsonl);
  std::size_t n = 0;
  while (std::getline(jl, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("n").get<int>() == static_cast<int>(n));
    CHECK(j.at("theta").contains("kappa"));
    CHECK(j.at("theta").contains("xi0_sq"));
    CHECK(j.at("theta").contains("G"));
    CHECK(j.at("R").get<double>() == trace.records[n].residual);
    CHECK(j.contains("spread"));
    if (n + 1 < trace.records.size()) {
      CHECK(!j.at("gamma").is_null());
    } else {
      CHECK(j.at("gamma").is_null());
    }
    ++n;
  }
  CHECK(n == trace.records.size());

  const auto summary = nlohmann::json::parse(trace_summary_json(trace));
  CHECK(summary.at("stop_reason") == "discrepancy");
  CHECK(summary.at("iterations").get<int>() == trace.iterations);
  CHECK(summary.at("theta").at("G").get<double>() ==
        trace.theta_final.shear_modulus);
  CHECK(summary.at("errors").contains("e_n"));
  CHECK(summary.at("delta").get<double>() == trace.delta);
}
