#include "torsion/irekm.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "json_util.hpp"
#include "parallel_util.hpp"
#include "torsion/rng.hpp"

namespace torsion {

void validate(const PriorSpec& prior) {
  auto check = [](const Interval& iv, const char* name) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.lo < iv.hi)) {
      throw std::invalid_argument(std::string("prior: ") + name +
                                  " needs lo < hi, got [" +
                                  std::to_string(iv.lo) + "," +
                                  std::to_string(iv.hi) + "]");
    }
  };
  check(prior.kappa, "kappa");
  check(prior.yield_sq, "yield threshold");
  check(prior.shear_modulus, "shear modulus");
  if (prior.kappa.lo < 0.0 || prior.kappa.hi > 1.0) {
    throw std::invalid_argument("prior: kappa range must sit inside [0,1]");
  }
  if (!(prior.shear_modulus.lo > 0.0)) {
    throw std::invalid_argument("prior: shear modulus range must be positive");
  }
  if (prior.yield_sq.lo < 0.0) {
    throw std::invalid_argument("prior: yield threshold range must be >= 0");
  }
}

ParamBox clamp_box(const PriorSpec& prior) {
  ParamBox box{prior.kappa, prior.yield_sq, prior.shear_modulus};
  if (box.yield_sq.lo <= 0.0) box.yield_sq.lo = 1e-6;
  return box;
}

Ensemble init_ensemble(const PriorSpec& prior, int n_members,
                       std::uint64_t seed) {
  validate(prior);
  if (n_members < 2) {
    throw std::invalid_argument("ensemble needs at least 2 members, got " +
                                std::to_string(n_members));
  }
  auto draw = [&](const Interval& iv, int j, std::uint64_t c) {
    return iv.lo + (iv.hi - iv.lo) *
                       uniform01(seed, Role::PriorInit,
                                 static_cast<std::uint64_t>(j), c);
  };
  Ensemble ens;
  ens.members.reserve(n_members);
  for (int j = 0; j < n_members; ++j) {
    MaterialParams p{draw(prior.kappa, j, 0), draw(prior.yield_sq, j, 1),
                     draw(prior.shear_modulus, j, 2)};
    // A yield draw of exactly 0 would be unphysical; the clamp box floor
    // applies at initialization too.
    p = clamp_to_box(p, clamp_box(prior));
    ens.members.push_back(p);
  }
  return ens;
}

Predictions predict(const Ensemble& ens, const AngleSet& angles,
                    const GridSpec& grid, const ForwardSettings& fwd,
                    int jobs) {
  validate(angles);
  validate(grid);
  const int ne = static_cast<int>(ens.members.size());
  const int m = static_cast<int>(angles.phi.size());
  Predictions w(ne, std::vector<double>(m, 0.0));
  // One task per (member, angle) pair; results land by index so the output
  // is independent of scheduling.
  std::vector<char> bad(static_cast<std::size_t>(ne) * m, 0);
  detail::parallel_for(ne * m, jobs, [&](int k) {
    const int j = k / m;
    const int i = k % m;
    const PlasticityFn fn = power_hardening(ens.members[j]);
    const ForwardResult res = solve_forward(grid, fn, angles.phi[i], fwd);
    if (!res.converged) {
      bad[k] = 1;
      return;
    }
    w[j][i] = torque(res.u_star);
  });
  std::vector<int> failed;
  for (int j = 0; j < ne; ++j) {
    for (int i = 0; i < m; ++i) {
      if (bad[static_cast<std::size_t>(j) * m + i]) {
        failed.push_back(j);
        break;
      }
    }
  }
  if (!failed.empty()) {
    std::ostringstream msg;
    msg << "forward map failed for member";
    for (int j : failed) msg << ' ' << j;
    throw PredictionError(msg.str(), failed);
  }
  return w;
}

namespace {

// Lower-triangular Cholesky factor, stored dense.
Matrix cholesky(const Matrix& a) {
  Matrix l(a.n);
  for (int i = 0; i < a.n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = a.at(i, j);
      for (int k = 0; k < j; ++k) sum -= l.at(i, k) * l.at(j, k);
      if (i == j) {
        if (!(sum > 0.0)) {
          throw std::runtime_error("cholesky: matrix is not positive definite");
        }
        l.at(i, j) = std::sqrt(sum);
      } else {
        l.at(i, j) = sum / l.at(j, j);
      }
    }
  }
  return l;
}

std::vector<double> cholesky_solve(const Matrix& l, std::vector<double> b) {
  const int n = l.n;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < i; ++k) b[i] -= l.at(i, k) * b[k];
    b[i] /= l.at(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    for (int k = i + 1; k < n; ++k) b[i] -= l.at(k, i) * b[k];
    b[i] /= l.at(i, i);
  }
  return b;
}

double norm2(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

MaterialParams member_spread(const Ensemble& ens, const MaterialParams& mean) {
  const int ne = static_cast<int>(ens.members.size());
  double sk = 0.0, sy = 0.0, sg = 0.0;
  for (const auto& p : ens.members) {
    sk += (p.kappa - mean.kappa) * (p.kappa - mean.kappa);
    sy += (p.yield_stress - mean.yield_stress) *
          (p.yield_stress - mean.yield_stress);
    sg += (p.shear_modulus - mean.shear_modulus) *
          (p.shear_modulus - mean.shear_modulus);
  }
  const double inv = 1.0 / (ne - 1);
  return MaterialParams{std::sqrt(sk * inv), std::sqrt(sy * inv),
                        std::sqrt(sg * inv)};
}

detail::json theta_json(const MaterialParams& p) {
  return {{"kappa", p.kappa},
          {"xi0_sq", p.yield_stress},
          {"G", p.shear_modulus}};
}

detail::json errors_json(const RelErrors& e) {
  return {{"e_kappa", e.e_kappa},
          {"e_xi", e.e_yield},
          {"e_G", e.e_shear},
          {"e_n", e.e_total}};
}

}  // namespace

std::vector<double> solve_spd(const Matrix& a, const std::vector<double>& b) {
  if (a.n != static_cast<int>(b.size())) {
    throw std::invalid_argument("solve_spd: size mismatch");
  }
  if (a.n == 1) {
    // One division is exact where sqrt-then-divide-twice rounds; scalar
    // systems sit on decision boundaries in the gamma search.
    if (!(a.a[0] > 0.0)) {
      throw std::runtime_error("cholesky: matrix is not positive definite");
    }
    return {b[0] / a.a[0]};
  }
  return cholesky_solve(cholesky(a), b);
}

KalmanStats ensemble_stats(const Ensemble& ens, const Predictions& w) {
  const int ne = static_cast<int>(ens.members.size());
  if (ne < 2 || static_cast<int>(w.size()) != ne) {
    throw std::invalid_argument("ensemble_stats: need >= 2 members and matching predictions");
  }
  const int m = static_cast<int>(w[0].size());
  KalmanStats s;
  s.w_mean.assign(m, 0.0);
  for (const auto& row : w) {
    if (static_cast<int>(row.size()) != m) {
      throw std::invalid_argument("ensemble_stats: ragged predictions");
    }
    for (int i = 0; i < m; ++i) s.w_mean[i] += row[i];
  }
  for (int i = 0; i < m; ++i) s.w_mean[i] /= ne;

  for (const auto& p : ens.members) {
    s.theta_mean.kappa += p.kappa;
    s.theta_mean.yield_stress += p.yield_stress;
    s.theta_mean.shear_modulus += p.shear_modulus;
  }
  s.theta_mean.kappa /= ne;
  s.theta_mean.yield_stress /= ne;
  s.theta_mean.shear_modulus /= ne;

  s.c_ww = Matrix(m);
  s.c_kw.assign(m, 0.0);
  s.c_yw.assign(m, 0.0);
  s.c_gw.assign(m, 0.0);
  const double inv = 1.0 / (ne - 1);
  for (int j = 0; j < ne; ++j) {
    const auto& p = ens.members[j];
    for (int i = 0; i < m; ++i) {
      const double dwi = w[j][i] - s.w_mean[i];
      s.c_kw[i] += (p.kappa - s.theta_mean.kappa) * dwi;
      s.c_yw[i] += (p.yield_stress - s.theta_mean.yield_stress) * dwi;
      s.c_gw[i] += (p.shear_modulus - s.theta_mean.shear_modulus) * dwi;
      for (int k = 0; k < m; ++k) {
        s.c_ww.at(i, k) += dwi * (w[j][k] - s.w_mean[k]);
      }
    }
  }
  for (int i = 0; i < m; ++i) {
    s.c_kw[i] *= inv;
    s.c_yw[i] *= inv;
    s.c_gw[i] *= inv;
    for (int k = 0; k < m; ++k) s.c_ww.at(i, k) *= inv;
  }
  return s;
}

GammaChoice select_gamma(const Matrix& c_ww, const std::vector<double>& d,
                         const std::vector<double>& w_mean, double sigma,
                         double rho, double gamma0, int max_doublings) {
  if (!(sigma > 0.0)) throw std::invalid_argument("select_gamma: sigma must be positive");
  if (!(rho > 0.0) || !(rho < 1.0)) {
    throw std::invalid_argument("select_gamma: rho must lie in (0,1)");
  }
  if (!(gamma0 > 0.0)) throw std::invalid_argument("select_gamma: gamma0 must be positive");
  const int m = static_cast<int>(d.size());
  if (c_ww.n != m || static_cast<int>(w_mean.size()) != m) {
    throw std::invalid_argument("select_gamma: size mismatch");
  }
  std::vector<double> r(m);
  for (int i = 0; i < m; ++i) r[i] = d[i] - w_mean[i];
  const double rnorm = norm2(r);
  if (rnorm == 0.0) return {gamma0, 0};
  const double s2 = sigma * sigma;
  // Crossing test: gamma |C^{-1/2}(C^ww + gamma C)^{-1} r| >= rho |C^{-1} r|
  // with C = sigma^2 I; both sides are scaled by sigma^2 so the comparison
  // needs no extra divisions.
  const double target = rho * rnorm;
  double gamma = gamma0;
  for (int i = 0; i <= max_doublings; ++i, gamma *= 2.0) {
    Matrix a = c_ww;
    for (int k = 0; k < m; ++k) a.at(k, k) += gamma * s2;
    const std::vector<double> z = solve_spd(a, r);
    if (gamma * sigma * norm2(z) >= target) return {gamma, i};
  }
  throw std::runtime_error("select_gamma: no crossing within " +
                           std::to_string(max_doublings) + " doublings");
}

void update_ensemble(Ensemble& ens, const Predictions& w,
                     const KalmanStats& stats,
                     const std::vector<std::vector<double>>& d_perturbed,
                     double gamma, double sigma, const ParamBox& box) {
  const int ne = static_cast<int>(ens.members.size());
  const int m = static_cast<int>(stats.w_mean.size());
  if (static_cast<int>(w.size()) != ne ||
      static_cast<int>(d_perturbed.size()) != ne) {
    throw std::invalid_argument("update_ensemble: size mismatch");
  }
  Matrix a = stats.c_ww;
  for (int k = 0; k < m; ++k) a.at(k, k) += gamma * sigma * sigma;
  const Matrix l = cholesky(a);
  std::vector<double> misfit(m);
  for (int j = 0; j < ne; ++j) {
    for (int i = 0; i < m; ++i) misfit[i] = d_perturbed[j][i] - w[j][i];
    const std::vector<double> z = cholesky_solve(l, misfit);
    MaterialParams& p = ens.members[j];
    for (int i = 0; i < m; ++i) {
      p.kappa += stats.c_kw[i] * z[i];
      p.yield_stress += stats.c_yw[i] * z[i];
      p.shear_modulus += stats.c_gw[i] * z[i];
    }
    p = clamp_to_box(p, box);
  }
}

double residual(const std::vector<double>& d, const std::vector<double>& w_mean,
                double sigma) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("residual: sigma must be positive");
  }
  if (d.size() != w_mean.size()) {
    throw std::invalid_argument("residual: size mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    sum += (d[i] - w_mean[i]) * (d[i] - w_mean[i]);
  }
  return std::sqrt(sum) / sigma;
}

RelErrors relative_errors(const MaterialParams& estimate,
                          const MaterialParams& truth) {
  if (truth.kappa == 0.0 || truth.yield_stress == 0.0 ||
      truth.shear_modulus == 0.0) {
    throw std::invalid_argument("relative_errors: truth has a zero component");
  }
  RelErrors e;
  e.e_kappa = std::abs(estimate.kappa - truth.kappa) / std::abs(truth.kappa);
  e.e_yield = std::abs(estimate.yield_stress - truth.yield_stress) /
              std::abs(truth.yield_stress);
  e.e_shear = std::abs(estimate.shear_modulus - truth.shear_modulus) /
              std::abs(truth.shear_modulus);
  const double dk = estimate.kappa - truth.kappa;
  const double dy = estimate.yield_stress - truth.yield_stress;
  const double dg = estimate.shear_modulus - truth.shear_modulus;
  const double tn = std::sqrt(truth.kappa * truth.kappa +
                              truth.yield_stress * truth.yield_stress +
                              truth.shear_modulus * truth.shear_modulus);
  e.e_total = std::sqrt(dk * dk + dy * dy + dg * dg) / tn;
  return e;
}

double noise_level(const ObservationSet& data, const GridSpec& grid,
                   const ForwardSettings& fwd, int jobs) {
  validate(data);
  if (!data.truth) {
    return std::sqrt(static_cast<double>(data.d.size()));
  }
  const std::vector<double> clean =
      observe(*data.truth, data.angles, grid, fwd, jobs);
  return residual(data.d, clean, data.sigma);
}

std::string to_string(StopReason r) {
  return r == StopReason::Discrepancy ? "discrepancy" : "max-iter";
}

InversionTrace run_irekm(const PriorSpec& prior, const ObservationSet& data,
                         const GridSpec& grid, const IrekmSettings& settings,
                         const ForwardSettings& fwd) {
  validate(prior);
  validate(data);
  validate(grid);
  if (!(data.sigma > 0.0)) {
    throw std::invalid_argument("run_irekm: data must carry sigma > 0");
  }
  if (settings.n_members < 2) {
    throw std::invalid_argument("run_irekm: need at least 2 ensemble members");
  }
  if (!(settings.rho > 0.0) || !(settings.rho < 1.0)) {
    throw std::invalid_argument("run_irekm: rho must lie in (0,1)");
  }
  if (!(settings.gamma0 > 0.0)) {
    throw std::invalid_argument("run_irekm: gamma0 must be positive");
  }
  if (settings.max_iter < 1) {
    throw std::invalid_argument("run_irekm: max_iter must be >= 1");
  }
  if (settings.tau && !(*settings.tau > 0.0)) {
    throw std::invalid_argument("run_irekm: tau must be positive");
  }

  InversionTrace trace;
  trace.tau = settings.tau.value_or(1.0 / settings.rho);
  trace.delta = settings.delta_override
                    ? *settings.delta_override
                    : noise_level(data, grid, fwd, settings.jobs);

  Ensemble ens = init_ensemble(prior, settings.n_members, settings.seed);
  const auto d_pert = perturb_for_ensemble(data, settings.n_members);
  const ParamBox box = clamp_box(prior);

  for (int n = 0;; ++n) {
    Predictions w;
    try {
      w = predict(ens, data.angles, grid, fwd, settings.jobs);
    } catch (const PredictionError& e) {
      throw InversionError(std::string("iteration ") + std::to_string(n) +
                               ": " + e.what(),
                           std::move(trace));
    }
    const KalmanStats stats = ensemble_stats(ens, w);

    TraceRecord rec;
    rec.n = n;
    rec.theta_mean = stats.theta_mean;
    rec.w_mean = stats.w_mean;
    rec.residual = residual(data.d, stats.w_mean, data.sigma);
    if (data.truth) {
      rec.errors = relative_errors(stats.theta_mean, *data.truth);
    }
    rec.spread = member_spread(ens, stats.theta_mean);
    trace.records.push_back(rec);

    trace.theta_final = stats.theta_mean;
    trace.iterations = n;
    if (rec.residual <= trace.tau * trace.delta) {
      trace.stop_reason = StopReason::Discrepancy;
      break;
    }
    if (n == settings.max_iter) {
      trace.stop_reason = StopReason::MaxIterations;
      break;
    }

    GammaChoice gc;
    try {
      gc = select_gamma(stats.c_ww, data.d, stats.w_mean, data.sigma,
                        settings.rho, settings.gamma0);
    } catch (const std::runtime_error& e) {
      throw InversionError(std::string("iteration ") + std::to_string(n) +
                               ": " + e.what(),
                           std::move(trace));
    }
    trace.records.back().gamma = gc.gamma;
    trace.records.back().gamma_doublings = gc.doublings;
    update_ensemble(ens, w, stats, d_pert, gc.gamma, data.sigma, box);
  }
  return trace;
}

std::string trace_to_jsonl(const InversionTrace& trace) {
  std::string out;
  for (const auto& rec : trace.records) {
    detail::json j;
    j["n"] = rec.n;
    j["theta"] = theta_json(rec.theta_mean);
    j["w_mean"] = rec.w_mean;
    j["R"] = rec.residual;
    j["gamma"] = rec.gamma ? detail::json(*rec.gamma) : detail::json(nullptr);
    j["gamma_doublings"] = rec.gamma_doublings
                               ? detail::json(*rec.gamma_doublings)
                               : detail::json(nullptr);
    j["errors"] =
        rec.errors ? errors_json(*rec.errors) : detail::json(nullptr);
    j["spread"] = theta_json(rec.spread);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string trace_to_csv(const InversionTrace& trace) {
  std::string out = "n,e_kappa,e_xi,e_G,e_n,R_n,gamma_n\n";
  for (const auto& rec : trace.records) {
    out += std::to_string(rec.n);
    out += ',';
    if (rec.errors) {
      out += detail::num_str(rec.errors->e_kappa) + ',' +
             detail::num_str(rec.errors->e_yield) + ',' +
             detail::num_str(rec.errors->e_shear) + ',' +
             detail::num_str(rec.errors->e_total) + ',';
    } else {
      out += ",,,,";
    }
    out += detail::num_str(rec.residual);
    out += ',';
    if (rec.gamma) out += detail::num_str(*rec.gamma);
    out += '\n';
  }
  return out;
}

std::string trace_summary_json(const InversionTrace& trace) {
  detail::json j;
  j["theta"] = theta_json(trace.theta_final);
  j["iterations"] = trace.iterations;
  j["stop_reason"] = to_string(trace.stop_reason);
  j["residual"] =
      trace.records.empty() ? detail::json(nullptr)
                            : detail::json(trace.records.back().residual);
  j["delta"] = trace.delta;
  j["tau"] = trace.tau;
  j["errors"] = (!trace.records.empty() && trace.records.back().errors)
                    ? errors_json(*trace.records.back().errors)
                    : detail::json(nullptr);
  return j.dump(2) + "\n";
}

}  // namespace torsion
