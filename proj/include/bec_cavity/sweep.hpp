#ifndef BEC_CAVITY_SWEEP_HPP
#define BEC_CAVITY_SWEEP_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bec_cavity/config.hpp"
#include "bec_cavity/depletion.hpp"
#include "bec_cavity/fluctuation.hpp"
#include "bec_cavity/meanfield.hpp"
#include "bec_cavity/result_table.hpp"
#include "bec_cavity/spectral.hpp"

namespace bec_cavity {

/// Worker count: hardware concurrency, capped by BEC_CAVITY_THREADS and by the job count.
inline int worker_count(std::size_t jobs) {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("BEC_CAVITY_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) n = std::min<long>(n, cap);
  }
  return static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(n, jobs)));
}

/// f(0..n-1) on a pool of workers; results are returned in index order. The
/// first exception by index is rethrown after all workers finish.
template <class F>
auto parallel_map(std::size_t n, F f, int threads) -> std::vector<decltype(f(std::size_t{}))> {
  using R = decltype(f(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        slots[i].emplace(f(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int count = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (count == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < count; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  std::vector<R> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

/// Status token for a failed point.
inline std::string error_status(const std::exception& e) {
  if (dynamic_cast<const ConvergenceError*>(&e)) return "error:convergence";
  if (dynamic_cast<const SingularBasisError*>(&e)) return "error:singular_basis";
  if (dynamic_cast<const ValidationError*>(&e)) return "error:invalid";
  return "error:numerics";
}

struct SpectrumPoint {
  double u0 = 0.0;
  std::string status = "ok";
  std::string message;
  bool heating_regime = false;
  StabilityReport stability;
  Eigen::VectorXcd omegas;
  std::vector<double> abs_l1, abs_l2, petermann;
};

inline SpectrumPoint analyze_spectrum_point(const RunConfig& cfg, const SystemParams& p) {
  SpectrumPoint pt;
  pt.u0 = p.u0;
  try {
    const Grid grid(p.grid_points);
    const MeanFieldState st = solve_ground_state(p, grid, cfg.meanfield);
    const FluctuationMatrix fm = build_matrix(st, p, grid, cfg.fluctuation);
    const ModeDecomposition dec = decompose(fm, cfg.spectral);
    pt.heating_regime = st.heating_regime;
    pt.stability = classify_stability(dec, cfg.depletion.tol_zero, cfg.depletion.tol_noise);
    pt.omegas = dec.omegas;
    for (Eigen::Index k = 0; k < dec.size(); ++k) {
      pt.abs_l1.push_back(std::abs(dec.l1(k)));
      pt.abs_l2.push_back(std::abs(dec.l2(k)));
      pt.petermann.push_back(petermann_factor(dec, k));
    }
    if (pt.stability.kind == Stability::unstable) pt.status = "unstable";
    else if (pt.heating_regime) pt.status = "heating";
    else if (pt.stability.kind == Stability::marginal) pt.status = "marginal";
  } catch (const std::exception& e) {
    pt.status = error_status(e);
    pt.message = e.what();
  }
  return pt;
}

inline std::vector<double> u0_values(const RunConfig& cfg) {
  if (!cfg.sweep) return {cfg.params.u0};
  if (cfg.sweep->parameter != "u0") throw ValidationError("spectrum sweeps take parameter u0");
  return sweep_values(*cfg.sweep);
}

inline std::vector<SpectrumPoint> spectrum_sweep(const RunConfig& cfg) {
  const std::vector<double> values = u0_values(cfg);
  return parallel_map(
      values.size(),
      [&](std::size_t i) {
        SystemParams p = cfg.params;
        p.u0 = values[i];
        return analyze_spectrum_point(cfg, p);
      },
      worker_count(values.size()));
}

inline void add_common_metadata(ResultTable& t, const char* command, const RunConfig& cfg) {
  t.add_metadata("bec-cavity", command);
  t.add_metadata("version", BEC_CAVITY_VERSION);
  t.add_metadata("config", to_json(cfg).dump());
}

inline ResultTable spectrum_table(const RunConfig& cfg, const std::vector<SpectrumPoint>& points) {
  ResultTable t({"u0", "mode_index", "re_omega", "im_omega", "abs_l1", "abs_l2", "petermann", "status"});
  add_common_metadata(t, "spectrum", cfg);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const SpectrumPoint& pt : points) {
    if (pt.status.rfind("error", 0) == 0) {
      t.add_row({pt.u0, -1.0, nan, nan, nan, nan, nan, pt.status});
      continue;
    }
    for (Eigen::Index k = 0; k < pt.omegas.size(); ++k) {
      if (cfg.nonneg_re_only && pt.omegas[k].real() < 0.0) continue;
      t.add_row({pt.u0, static_cast<double>(k), pt.omegas[k].real(), pt.omegas[k].imag(), pt.abs_l1[k],
                 pt.abs_l2[k], pt.petermann[k], pt.status});
    }
  }
  return t;
}

struct DepletionPoint {
  double delta_c = 0.0;
  double u0 = 0.0;
  std::string stability = "n/a";
  std::string status = "ok";
  std::string message;
  double steady = std::numeric_limits<double>::quiet_NaN();
  double dominated = std::numeric_limits<double>::quiet_NaN();
  double relaxation = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> finite;            ///< one value per configured time
  double oracle_steady = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> oracle_finite;
  std::size_t skipped_pairs = 0;
};

/// Mean field, matrix, decomposition and depletion for one parameter set.
inline DepletionPoint analyze_depletion_point(const RunConfig& cfg, const SystemParams& p) {
  DepletionPoint pt;
  pt.delta_c = p.delta_c;
  pt.u0 = p.u0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    const Grid grid(p.grid_points);
    const MeanFieldState st = solve_ground_state(p, grid, cfg.meanfield);
    const FluctuationMatrix fm = build_matrix(st, p, grid, cfg.fluctuation);
    const ModeDecomposition dec = decompose(fm, cfg.spectral);
    const StabilityReport rep = classify_stability(dec, cfg.depletion.tol_zero, cfg.depletion.tol_noise);
    pt.stability = to_string(rep.kind);
    pt.relaxation = relaxation_time(dec, cfg.depletion);
    const bool with_oracle = cfg.oracle && fm.ng <= kOracleMaxGrid;

    if (!cfg.times.empty()) {
      pt.finite = depletion_at_times(dec, cfg.times).values;
      if (with_oracle) pt.oracle_finite = lyapunov_oracle_at_times(fm, cfg.times).values;
      if (rep.kind == Stability::unstable) pt.status = "unstable";
      else if (st.heating_regime) pt.status = "heating";
      return pt;
    }

    if (rep.kind == Stability::unstable) {
      pt.status = "unstable";
      return pt;
    }
    if (st.heating_regime) {
      pt.status = "heating";
      return pt;
    }
    const DepletionResult ss = steady_state_depletion(dec, rep, false, cfg.depletion);
    pt.skipped_pairs = ss.skipped.size();
    if (ss.diverged) {
      pt.status = "diverged";
      return pt;
    }
    pt.steady = ss.values.front();
    pt.dominated = dominated_fraction(dec, ss, cfg.depletion);
    if (with_oracle) {
      const DepletionResult os = lyapunov_oracle_steady(fm, cfg.depletion);
      pt.oracle_steady = os.diverged ? nan : os.values.front();
    }
  } catch (const std::exception& e) {
    pt.status = error_status(e);
    pt.message = e.what();
  }
  return pt;
}

/// Parameter sets of a depletion sweep, curve by curve.
inline std::vector<SystemParams> depletion_grid(const RunConfig& cfg) {
  std::vector<SystemParams> out;
  auto with_detuning = [&](SystemParams p, double d) {
    p.delta_c = d;
    if (cfg.eta_follows_detuning) p.eta = -d;
    return p;
  };
  if (cfg.sweep && cfg.sweep->parameter == "delta_c") {
    if (!cfg.detunings.empty()) throw ValidationError("detunings cannot be combined with a delta_c sweep");
    for (double d : sweep_values(*cfg.sweep)) out.push_back(with_detuning(cfg.params, d));
    return out;
  }
  const std::vector<double> detunings = cfg.detunings.empty() ? std::vector<double>{cfg.params.delta_c} : cfg.detunings;
  const std::vector<double> us = cfg.sweep ? sweep_values(*cfg.sweep) : std::vector<double>{cfg.params.u0};
  for (double d : detunings)
    for (double u : us) {
      SystemParams p = with_detuning(cfg.params, d);
      p.u0 = u;
      out.push_back(p);
    }
  return out;
}

inline std::vector<DepletionPoint> depletion_sweep(const RunConfig& cfg) {
  const std::vector<SystemParams> grid = depletion_grid(cfg);
  return parallel_map(
      grid.size(), [&](std::size_t i) { return analyze_depletion_point(cfg, grid[i]); }, worker_count(grid.size()));
}

inline double relative_difference(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) return std::numeric_limits<double>::quiet_NaN();
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

inline ResultTable depletion_table(const RunConfig& cfg, const std::vector<DepletionPoint>& points) {
  const bool timed = !cfg.times.empty();
  std::vector<std::string> cols{"delta_c", "u0"};
  if (timed) cols.push_back("time");
  for (const char* c : {"depletion", "stability", "dominated_fraction", "relaxation_time"}) cols.emplace_back(c);
  if (cfg.oracle) {
    cols.emplace_back("oracle_depletion");
    cols.emplace_back("oracle_rel_diff");
  }
  cols.emplace_back("status");
  ResultTable t(cols);
  add_common_metadata(t, "depletion", cfg);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  auto emit = [&](const DepletionPoint& pt, std::optional<double> time, double value, double oracle) {
    std::vector<Cell> row{pt.delta_c, pt.u0};
    if (time) row.emplace_back(*time);
    row.emplace_back(value);
    row.emplace_back(pt.stability);
    row.emplace_back(time ? nan : pt.dominated);
    row.emplace_back(pt.relaxation);
    if (cfg.oracle) {
      row.emplace_back(oracle);
      row.emplace_back(relative_difference(value, oracle));
    }
    row.emplace_back(pt.status);
    t.add_row(std::move(row));
  };

  for (const DepletionPoint& pt : points) {
    if (!timed) {
      emit(pt, std::nullopt, pt.steady, pt.oracle_steady);
      continue;
    }
    for (std::size_t i = 0; i < cfg.times.size(); ++i) {
      const double v = i < pt.finite.size() ? pt.finite[i] : nan;
      const double o = i < pt.oracle_finite.size() ? pt.oracle_finite[i] : nan;
      emit(pt, cfg.times[i], v, o);
    }
  }
  return t;
}

} // namespace bec_cavity

#endif // BEC_CAVITY_SWEEP_HPP
