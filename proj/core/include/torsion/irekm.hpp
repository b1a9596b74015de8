#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "torsion/observe.hpp"
#include "torsion/plasticity.hpp"

namespace torsion {

// Independent uniform priors per component.
struct PriorSpec {
  Interval kappa{0.2, 0.9};
  Interval yield_sq{0.0, 0.15};
  Interval shear_modulus{42.0, 43.0};
};

// Each interval must satisfy lo < hi and be finite; kappa range must sit
// inside [0,1]; shear range must be positive.
void validate(const PriorSpec& prior);

// Box used to clamp members after an update. Matches the prior except that
// a yield lower bound <= 0 is raised to 1e-6 so members stay physical.
ParamBox clamp_box(const PriorSpec& prior);

struct Ensemble {
  std::vector<MaterialParams> members;
};

// Member j draws its three components from uniform01(seed, Role::PriorInit,
// j, c) with c = 0,1,2 for kappa, yield, shear.
Ensemble init_ensemble(const PriorSpec& prior, int n_members,
                       std::uint64_t seed);

// predictions[j] = observe(members[j]); all rows have length M.
using Predictions = std::vector<std::vector<double>>;

struct PredictionError : std::runtime_error {
  std::vector<int> failed;  // member indices whose forward map failed
  PredictionError(const std::string& msg, std::vector<int> which)
      : std::runtime_error(msg), failed(std::move(which)) {}
};

Predictions predict(const Ensemble& ens, const AngleSet& angles,
                    const GridSpec& grid, const ForwardSettings& fwd = {},
                    int jobs = 1);

// Small dense symmetric matrix, row-major.
struct Matrix {
  int n = 0;
  std::vector<double> a;

  Matrix() = default;
  explicit Matrix(int size) : n(size), a(static_cast<std::size_t>(size) * size, 0.0) {}
  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * n + c]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * n + c]; }
};

// Solves A x = b for symmetric positive definite A by Cholesky
// factorization. Throws std::runtime_error if a pivot is not positive.
std::vector<double> solve_spd(const Matrix& a, const std::vector<double>& b);

// Sample statistics with the 1/(N-1) convention.
struct KalmanStats {
  std::vector<double> w_mean;        // mean prediction, length M
  Matrix c_ww;                       // prediction covariance, M x M
  std::vector<double> c_kw, c_yw, c_gw;  // parameter-prediction covariances
  MaterialParams theta_mean;         // ensemble mean parameters
};

KalmanStats ensemble_stats(const Ensemble& ens, const Predictions& w);

struct GammaChoice {
  double gamma = 0.0;
  int doublings = 0;  // gamma = gamma0 * 2^doublings
};

// Smallest gamma = gamma0 * 2^i with
//   gamma * |C^{-1/2} (C^ww + gamma C)^{-1} r| >= rho * |C^{-1} r|,
// where C = sigma^2 I and r = d - w_mean. A zero residual returns
// {gamma0, 0}. Throws std::runtime_error after max_doublings doublings.
GammaChoice select_gamma(const Matrix& c_ww, const std::vector<double>& d,
                         const std::vector<double>& w_mean, double sigma,
                         double rho, double gamma0, int max_doublings = 64);

// Kalman update with data perturbed per member:
//   theta_j += C^{theta w} (C^ww + gamma sigma^2 I)^{-1} (d_j - w_j),
// then clamp each member to `box`.
void update_ensemble(Ensemble& ens, const Predictions& w,
                     const KalmanStats& stats,
                     const std::vector<std::vector<double>>& d_perturbed,
                     double gamma, double sigma, const ParamBox& box);

// Whitened residual |(d - w_mean)/sigma|_2. sigma must be positive.
double residual(const std::vector<double>& d,
                const std::vector<double>& w_mean, double sigma);

struct RelErrors {
  double e_kappa = 0.0;
  double e_yield = 0.0;
  double e_shear = 0.0;
  double e_total = 0.0;  // |theta - truth|_2 / |truth|_2
};

// Componentwise |est-true|/|true| plus the euclidean relative error.
// Throws std::invalid_argument if a truth component is zero.
RelErrors relative_errors(const MaterialParams& estimate,
                          const MaterialParams& truth);

// Discrepancy level delta: with truth available, the whitened distance
// between d and a fresh noise-free observation of the truth; without truth,
// sqrt(M) (noise is then the only expected misfit).
double noise_level(const ObservationSet& data, const GridSpec& grid,
                   const ForwardSettings& fwd = {}, int jobs = 1);

enum class StopReason { Discrepancy, MaxIterations };

// "discrepancy" / "max-iter".
std::string to_string(StopReason r);

struct TraceRecord {
  int n = 0;
  MaterialParams theta_mean;
  std::vector<double> w_mean;
  double residual = 0.0;
  std::optional<RelErrors> errors;       // present when data carries truth
  std::optional<double> gamma;           // absent on the stopping record
  std::optional<int> gamma_doublings;
  MaterialParams spread;                 // componentwise std-dev of members
};

struct InversionTrace {
  std::vector<TraceRecord> records;
  MaterialParams theta_final;
  StopReason stop_reason = StopReason::MaxIterations;
  int iterations = 0;  // updates performed
  double delta = 0.0;
  double tau = 0.0;
};

// A member's forward map failed mid-inversion; `partial` holds the trace up
// to the failure.
struct InversionError : std::runtime_error {
  InversionTrace partial;
  InversionError(const std::string& msg, InversionTrace t)
      : std::runtime_error(msg), partial(std::move(t)) {}
};

struct IrekmSettings {
  int n_members = 200;
  double rho = 0.7;                   // in (0,1)
  double gamma0 = 1.0;
  std::optional<double> tau;          // default 1/rho
  int max_iter = 100;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::optional<double> delta_override;  // skips noise_level()
};

// Iterative regularizing ensemble Kalman inversion. Records one TraceRecord
// per predict/compare step; stops on residual <= tau*delta (Discrepancy) or
// after max_iter updates (MaxIterations). data.sigma must be positive.
InversionTrace run_irekm(const PriorSpec& prior, const ObservationSet& data,
                         const GridSpec& grid, const IrekmSettings& settings,
                         const ForwardSettings& fwd = {});

// One JSON object per record:
// {"n":..,"theta":{..},"w_mean":[..],"R":..,"gamma":..|null,
//  "gamma_doublings":..|null,"errors":{..}|null,"spread":{..}}.
std::string trace_to_jsonl(const InversionTrace& trace);

// CSV header: n,e_kappa,e_xi,e_G,e_n,R_n,gamma_n. Error columns are empty
// when the data had no truth; gamma_n is empty on the stopping record.
std::string trace_to_csv(const InversionTrace& trace);

// Summary object: {"theta":{..},"iterations":..,"stop_reason":..,
// "residual":..,"delta":..,"tau":..,"errors":{..}|null}.
std::string trace_summary_json(const InversionTrace& trace);

}  // namespace torsion
