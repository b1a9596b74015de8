#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tables.hpp"
#include "torsion/observe.hpp"

namespace torsion_cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string num(double x) { return json(x).dump(); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

fs::path make_out_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

torsion::ScalarField bubble(const torsion::GridSpec& g) {
  return torsion::make_field(
      g, [](double x, double y) { return (x - x * x) * (y - y * y); });
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Same contract as the core thread fan-out: tasks claim indices from a
// shared counter and write results only at their own index.
template <typename Fn>
void run_cells(int n, int jobs, Fn&& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int k = next.fetch_add(1);
        if (k >= n) break;
        fn(k);
      }
    });
  }
  for (auto& th : pool) th.join();
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == '&') c = '_';
  }
  return s;
}

}  // namespace

int cmd_forward(const RunConfig& cfg) {
  const bool test_mode = !cfg.test.empty();
  if (test_mode && (cfg.grid.lx != 1.0 || cfg.grid.ly != 1.0)) {
    throw ConfigError("test modes require the unit square (grid.a = grid.b = 1)");
  }
  if (!test_mode && !(cfg.phi > 0.0 && std::isfinite(cfg.phi))) {
    throw std::invalid_argument("phi must be positive finite, got " +
                                std::to_string(cfg.phi));
  }

  const torsion::PlasticityFn fn = (cfg.test == "test2")
                                       ? torsion::rational_diffusion()
                                       : torsion::power_hardening(cfg.material);
  torsion::ForwardResult res;
  double max_abs_err = 0.0;
  if (test_mode) {
    const torsion::ScalarField u_ex = bubble(cfg.grid);
    const torsion::ScalarField rhs = torsion::apply_operator(u_ex, fn);
    res = torsion::solve_forward(cfg.grid, fn, rhs, cfg.forward);
    max_abs_err = torsion::linf_diff(u_ex, res.u_star);
  } else {
    res = torsion::solve_forward(cfg.grid, fn, cfg.phi, cfg.forward);
  }

  const double t = torsion::torque(res.u_star);
  const double m = torsion::max_grad_sq(res.u_star);

  const fs::path dir = make_out_dir(cfg.out);
  write_text(dir / "config.json", config_to_json(cfg));
  torsion::write_csv(res.u_star, (dir / "solution.csv").string());
  {
    std::string hist = "iter,h1_diff\n";
    for (std::size_t k = 0; k < res.diff_history.size(); ++k) {
      hist += std::to_string(k + 1) + ',' + num(res.diff_history[k]) + '\n';
    }
    write_text(dir / "convergence.csv", hist);
  }
  json summary;
  summary["test"] = cfg.test;
  summary["phi"] = test_mode ? json(nullptr) : json(cfg.phi);
  summary["torque"] = t;
  summary["max_grad_sq"] = m;
  summary["classification"] =
      (cfg.test == "test2")
          ? json(nullptr)
          : json(torsion::to_string(torsion::classify_measurement(
                m, cfg.material.yield_stress)));
  summary["iterations"] = res.iterations;
  summary["converged"] = res.converged;
  summary["max_abs_err"] = test_mode ? json(max_abs_err) : json(nullptr);
  write_text(dir / "summary.json", summary.dump(2) + "\n");

  std::cout << "torque=" << t << " max_grad_sq=" << m
            << " iterations=" << res.iterations
            << " converged=" << (res.converged ? "yes" : "no") << '\n';
  if (!res.converged) {
    std::cerr << "forward solve did not meet tol " << cfg.forward.tol
              << " within " << cfg.forward.max_iter << " iterations\n";
    return kExitNoConvergence;
  }
  return kExitOk;
}

int cmd_generate(const RunConfig& cfg) {
  if (cfg.angles.empty()) {
    throw std::invalid_argument("generate needs at least one angle");
  }
  const torsion::AngleSet angles{cfg.angles};
  const auto detailed = torsion::observe_detailed(cfg.material, angles,
                                                  cfg.grid, cfg.forward, cfg.jobs);
  const torsion::ObservationSet data =
      torsion::generate_data(cfg.material, angles, cfg.sigma, cfg.seed,
                             cfg.grid, cfg.forward, cfg.jobs);

  int plastic = 0, elastic = 0;
  for (std::size_t i = 0; i < detailed.size(); ++i) {
    const auto cls = torsion::classify_measurement(
        detailed[i].max_grad_sq, cfg.material.yield_stress);
    const char letter = (cls == torsion::Deformation::Plastic) ? 'P' : 'E';
    (cls == torsion::Deformation::Plastic ? plastic : elastic) += 1;
    std::cout << "phi=" << angles.phi[i] << ": " << letter
              << " (M=" << detailed[i].max_grad_sq << ")\n";
  }
  std::cout << plastic << " P & " << elastic << " E\n";

  const fs::path dir = make_out_dir(cfg.out);
  write_text(dir / "config.json", config_to_json(cfg));
  torsion::write_observation(data, (dir / "observations.json").string());
  std::cout << "wrote " << (dir / "observations.json").string() << '\n';
  return kExitOk;
}

namespace {

void write_trace_files(const fs::path& dir, const torsion::InversionTrace& t) {
  write_text(dir / "trace.jsonl", torsion::trace_to_jsonl(t));
  write_text(dir / "errors.csv", torsion::trace_to_csv(t));
  write_text(dir / "summary.json", torsion::trace_summary_json(t));
}

}  // namespace

int cmd_invert(const RunConfig& cfg, const std::string& data_path) {
  const torsion::ObservationSet data = torsion::read_observation(data_path);
  const fs::path dir = make_out_dir(cfg.out);
  write_text(dir / "config.json", config_to_json(cfg));

  torsion::InversionTrace trace;
  try {
    trace = torsion::run_irekm(cfg.prior, data, cfg.grid, cfg.irekm, cfg.forward);
  } catch (const torsion::InversionError& e) {
    write_trace_files(dir, e.partial);
    std::cerr << "inversion aborted: " << e.what() << '\n';
    return kExitNoConvergence;
  }
  write_trace_files(dir, trace);

  std::cout << "stop=" << torsion::to_string(trace.stop_reason)
            << " iterations=" << trace.iterations
            << " kappa=" << trace.theta_final.kappa
            << " xi0_sq=" << trace.theta_final.yield_stress
            << " G=" << trace.theta_final.shear_modulus << '\n';
  if (!trace.records.empty() && trace.records.back().errors) {
    std::cout << "e_n=" << trace.records.back().errors->e_total << '\n';
  }
  return trace.stop_reason == torsion::StopReason::Discrepancy ? kExitOk
                                                               : kExitMaxIter;
}

namespace {

struct CellResult {
  std::string case_label;
  std::string label;
  std::string sigma;      // empty for forward cells
  double reference = 0.0;
  double band = 0.0;      // allowed |obtained - reference| (forward cells)
                          // or allowed obtained ceiling (inversion cells)
  double obtained = 0.0;
  double median_n = 0.0;
  bool pass = false;
  std::string note;
};

std::string report_csv(const std::string& table,
                       const std::vector<CellResult>& cells) {
  std::string out = "table,case,label,sigma,reference,band,obtained,median_n,status\n";
  for (const auto& c : cells) {
    out += table + ',' + c.case_label + ',' + c.label + ',' + c.sigma + ',' +
           num(c.reference) + ',' + num(c.band) + ',' + num(c.obtained) + ',' +
           num(c.median_n) + ',' + (c.note.empty() ? (c.pass ? "PASS" : "FAIL") : "ERROR") +
           '\n';
  }
  return out;
}

std::string report_txt(const std::string& table,
                       const std::vector<CellResult>& cells) {
  std::ostringstream out;
  int passed = 0;
  for (const auto& c : cells) {
    out << table << ' ' << c.case_label << ' ' << c.label;
    if (!c.sigma.empty()) out << " sigma=" << c.sigma;
    if (!c.note.empty()) {
      out << ": ERROR (" << c.note << ")\n";
      continue;
    }
    out << ": reference " << c.reference << ", obtained " << c.obtained
        << ", band " << c.band << " -> " << (c.pass ? "PASS" : "FAIL") << '\n';
    passed += c.pass ? 1 : 0;
  }
  out << passed << '/' << cells.size() << " cells inside their bands\n";
  return out.str();
}

std::vector<CellResult> reproduce_forward(const RunConfig& cfg,
                                          const ForwardTable& table) {
  std::vector<CellResult> cells(table.cases.size() * table.angles.size());
  run_cells(static_cast<int>(cells.size()), cfg.jobs, [&](int k) {
    const std::size_t ci = k / table.angles.size();
    const std::size_t ai = k % table.angles.size();
    const ForwardCase& fc = table.cases[ci];
    CellResult& cell = cells[k];
    cell.case_label = fc.label;
    cell.label = "phi=" + num(table.angles[ai]);
    cell.reference = fc.expected[ai];
    cell.band = 0.02 * fc.expected[ai];
    try {
      const torsion::MaterialParams p{fc.kappa, table.yield_sq,
                                      table.shear_modulus};
      const torsion::ForwardResult res = torsion::solve_forward(
          cfg.grid, torsion::power_hardening(p), table.angles[ai], cfg.forward);
      if (!res.converged) {
        cell.note = "forward solve did not converge";
        return;
      }
      cell.obtained = torsion::max_grad_sq(res.u_star);
      cell.median_n = res.iterations;
      cell.pass = std::abs(cell.obtained - cell.reference) <= cell.band;
    } catch (const std::exception& e) {
      cell.note = e.what();
    }
  });
  return cells;
}

std::vector<CellResult> reproduce_inversion(const RunConfig& cfg,
                                            const InversionTable& table,
                                            int seeds, const fs::path& out_dir) {
  const torsion::MaterialParams truth{table.kappa, table.yield_sq,
                                      table.shear_modulus};
  torsion::PriorSpec prior = cfg.prior;
  prior.shear_modulus = {table.prior_shear[0], table.prior_shear[1]};

  const int n_cfg = static_cast<int>(kDataConfigs.size());
  const int n_sigma = static_cast<int>(kSigmaLevels.size());
  std::vector<CellResult> cells(static_cast<std::size_t>(n_cfg) * n_sigma);
  run_cells(n_cfg * n_sigma, cfg.jobs, [&](int k) {
    const DataConfig& dc = kDataConfigs[k / n_sigma];
    const double sigma = kSigmaLevels[k % n_sigma];
    CellResult& cell = cells[k];
    cell.case_label = "kappa=" + num(table.kappa);
    cell.label = dc.label;
    cell.sigma = num(sigma);
    cell.reference = table.reference[k / n_sigma][k % n_sigma];
    const double mult = (k % n_sigma == 0) ? 7.0 : 3.0;
    cell.band = mult * cell.reference;
    try {
      torsion::AngleSet angles;
      for (int idx : dc.angle_idx) angles.phi.push_back(table.angles[idx]);

      std::vector<double> errs, iters;
      for (int s = 0; s < seeds; ++s) {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(s);
        const torsion::ObservationSet data = torsion::generate_data(
            truth, angles, sigma, seed, cfg.grid, cfg.forward, 1);
        torsion::IrekmSettings st = cfg.irekm;
        st.seed = seed;
        st.jobs = 1;
        const torsion::InversionTrace trace =
            torsion::run_irekm(prior, data, cfg.grid, st, cfg.forward);
        errs.push_back(trace.records.back().errors->e_total);
        iters.push_back(trace.iterations);

        const fs::path cell_dir = out_dir / "cells" /
                                  (sanitize(dc.label) + "_s" + num(sigma)) /
                                  ("seed_" + std::to_string(seed));
        fs::create_directories(cell_dir);
        torsion::write_observation(data,
                                   (cell_dir / "observations.json").string());
        write_trace_files(cell_dir, trace);
      }
      cell.obtained = median(errs);
      cell.median_n = median(iters);
      cell.pass = cell.obtained <= cell.band;
    } catch (const std::exception& e) {
      cell.note = e.what();
    }
  });
  return cells;
}

}  // namespace

int cmd_reproduce(const RunConfig& cfg, const std::string& table_id,
                  int seeds) {
  if (seeds < 1) throw ConfigError("seeds must be >= 1");
  const ForwardTable* ft = find_forward_table(table_id);
  const InversionTable* it = find_inversion_table(table_id);
  if (!ft && !it) {
    throw ConfigError("unknown table id: " + table_id +
                      " (expected one of T1, T4, T5, T6, T7, T8)");
  }
  const fs::path dir = make_out_dir(cfg.out);
  write_text(dir / "config.json", config_to_json(cfg));

  const std::vector<CellResult> cells =
      ft ? reproduce_forward(cfg, *ft) : reproduce_inversion(cfg, *it, seeds, dir);

  const std::string csv = report_csv(table_id, cells);
  const std::string txt = report_txt(table_id, cells);
  write_text(dir / "report.csv", csv);
  write_text(dir / "report.txt", txt);
  std::cout << txt;

  const bool all_pass = std::all_of(cells.begin(), cells.end(), [](const CellResult& c) {
    return c.pass && c.note.empty();
  });
  if (!all_pass) {
    std::cerr << "some cells fell outside their bands; see "
              << (dir / "report.csv").string() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace torsion_cli
