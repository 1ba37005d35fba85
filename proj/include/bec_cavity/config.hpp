#ifndef BEC_CAVITY_CONFIG_HPP
#define BEC_CAVITY_CONFIG_HPP

#include <cmath>
#include <complex>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bec_cavity/depletion.hpp"
#include "bec_cavity/errors.hpp"
#include "bec_cavity/fluctuation.hpp"
#include "bec_cavity/meanfield.hpp"
#include "bec_cavity/params.hpp"
#include "bec_cavity/spectral.hpp"

#ifndef BEC_CAVITY_VERSION
#define BEC_CAVITY_VERSION "0.1.0"
#endif

namespace bec_cavity {

struct SweepSpec {
  std::string parameter = "u0";   ///< u0 or delta_c
  double from = 0.0;
  double to = 0.0;
  int points = 1;
  std::string scale = "linear";   ///< linear or log (log spaces |value|, sign kept)
};

struct RunConfig {
  SystemParams params;
  MeanFieldOptions meanfield;
  FluctuationOptions fluctuation;
  SpectralOptions spectral;
  DepletionOptions depletion;
  std::optional<SweepSpec> sweep;
  std::vector<double> detunings;        ///< depletion curves; empty means params.delta_c only
  bool eta_follows_detuning = true;     ///< eta = -delta_c on each depletion curve
  std::vector<double> times;
  bool nonneg_re_only = false;
  bool oracle = false;
  int verify_grid_points = 16;
  std::string output;
  std::string format = "csv";
};

/// Values of the swept parameter, in ascending order of index.
inline std::vector<double> sweep_values(const SweepSpec& s) {
  std::vector<double> out;
  if (s.points == 1) return {s.from};
  out.reserve(s.points);
  for (int i = 0; i < s.points; ++i) {
    const double f = static_cast<double>(i) / (s.points - 1);
    if (s.scale == "log") {
      const double sign = s.from < 0.0 ? -1.0 : 1.0;
      const double a = std::log(std::abs(s.from)), b = std::log(std::abs(s.to));
      out.push_back(sign * std::exp(a + f * (b - a)));
    } else {
      out.push_back(s.from + f * (s.to - s.from));
    }
  }
  out.front() = s.from;
  out.back() = s.to;
  return out;
}

namespace detail {

inline void validate_config(const RunConfig& c) {
  std::vector<std::string> problems;
  try {
    validate(c.params);
  } catch (const ValidationError& e) {
    problems.emplace_back(e.what());
  }
  const auto& m = c.meanfield;
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) problems.push_back(std::string(name) + " must be positive");
  };
  positive(m.itp_dt, "itp_dt");
  positive(m.tol_phi, "tol_phi");
  positive(m.tol_alpha, "tol_alpha");
  positive(c.depletion.tol_pair, "tol_pair");
  positive(c.depletion.tol_noise, "tol_noise");
  positive(c.depletion.tol_zero, "tol_zero");
  positive(c.spectral.max_condition, "max_condition");
  if (!(m.mixing > 0.0 && m.mixing <= 1.0)) problems.emplace_back("mixing must lie in (0, 1]");
  if (m.max_iters < 1) problems.emplace_back("max_iters must be positive");
  if (c.verify_grid_points < 8 || c.verify_grid_points % 2 || c.verify_grid_points > kOracleMaxGrid)
    problems.emplace_back("verify_grid_points must be even in [8, 32]");
  for (double t : c.times)
    if (!(t >= 0.0) || !std::isfinite(t)) problems.emplace_back("times must be finite and >= 0");
  for (double d : c.detunings)
    if (!std::isfinite(d)) problems.emplace_back("detunings must be finite");
  if (c.format != "csv") problems.emplace_back("format must be csv");
  if (c.sweep) {
    const SweepSpec& s = *c.sweep;
    if (s.parameter != "u0" && s.parameter != "delta_c") problems.emplace_back("sweep parameter must be u0 or delta_c");
    if (s.points < 1) problems.emplace_back("sweep points must be >= 1");
    if (!std::isfinite(s.from) || !std::isfinite(s.to)) problems.emplace_back("sweep bounds must be finite");
    else if (s.from > s.to) problems.emplace_back("sweep bounds must satisfy from <= to");
    if (s.scale != "linear" && s.scale != "log") problems.emplace_back("sweep scale must be linear or log");
    if (s.scale == "log" && !(s.from * s.to > 0.0))
      problems.emplace_back("log sweep bounds must be nonzero with equal sign");
  }
  if (!problems.empty()) {
    std::ostringstream os;
    os << "invalid config: ";
    for (std::size_t i = 0; i < problems.size(); ++i) os << (i ? "; " : "") << problems[i];
    throw ValidationError(os.str());
  }
}

template <class T>
T get_as(const nlohmann::json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("invalid config: wrong type for key " + key);
  }
}

} // namespace detail

/// Parses a config object. Unknown keys are errors.
inline RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("invalid config: top level must be an object");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "delta_c") c.params.delta_c = detail::get_as<double>(v, key);
    else if (key == "kappa") c.params.kappa = detail::get_as<double>(v, key);
    else if (key == "eta") c.params.eta = detail::get_as<double>(v, key);
    else if (key == "u0") c.params.u0 = detail::get_as<double>(v, key);
    else if (key == "n_atoms") c.params.n_atoms = detail::get_as<std::int64_t>(v, key);
    else if (key == "grid_points") c.params.grid_points = detail::get_as<int>(v, key);
    else if (key == "itp_dt") c.meanfield.itp_dt = detail::get_as<double>(v, key);
    else if (key == "tol_phi") c.meanfield.tol_phi = detail::get_as<double>(v, key);
    else if (key == "tol_alpha") c.meanfield.tol_alpha = detail::get_as<double>(v, key);
    else if (key == "mixing") c.meanfield.mixing = detail::get_as<double>(v, key);
    else if (key == "max_iters") c.meanfield.max_iters = detail::get_as<long>(v, key);
    else if (key == "refine") c.meanfield.refine = detail::get_as<bool>(v, key);
    else if (key == "frozen_alpha") {
      const auto pair = detail::get_as<std::vector<double>>(v, key);
      if (pair.size() != 2) throw ValidationError("invalid config: frozen_alpha must be [re, im]");
      c.meanfield.frozen_alpha = std::complex<double>(pair[0], pair[1]);
    }
    else if (key == "subtract_mu") c.fluctuation.subtract_mu = detail::get_as<bool>(v, key);
    else if (key == "project_condensate") c.fluctuation.project_condensate = detail::get_as<bool>(v, key);
    else if (key == "max_condition") c.spectral.max_condition = detail::get_as<double>(v, key);
    else if (key == "tol_pair") c.depletion.tol_pair = detail::get_as<double>(v, key);
    else if (key == "tol_noise") c.depletion.tol_noise = detail::get_as<double>(v, key);
    else if (key == "tol_zero") c.depletion.tol_zero = detail::get_as<double>(v, key);
    else if (key == "detunings") c.detunings = detail::get_as<std::vector<double>>(v, key);
    else if (key == "eta_follows_detuning") c.eta_follows_detuning = detail::get_as<bool>(v, key);
    else if (key == "times") c.times = detail::get_as<std::vector<double>>(v, key);
    else if (key == "nonneg_re_only") c.nonneg_re_only = detail::get_as<bool>(v, key);
    else if (key == "oracle") c.oracle = detail::get_as<bool>(v, key);
    else if (key == "verify_grid_points") c.verify_grid_points = detail::get_as<int>(v, key);
    else if (key == "output") c.output = detail::get_as<std::string>(v, key);
    else if (key == "format") c.format = detail::get_as<std::string>(v, key);
    else if (key == "sweep") {
      if (!v.is_object()) throw ValidationError("invalid config: sweep must be an object");
      SweepSpec s;
      for (const auto& [sk, sv] : v.items()) {
        if (sk == "parameter") s.parameter = detail::get_as<std::string>(sv, sk);
        else if (sk == "from") s.from = detail::get_as<double>(sv, sk);
        else if (sk == "to") s.to = detail::get_as<double>(sv, sk);
        else if (sk == "points") s.points = detail::get_as<int>(sv, sk);
        else if (sk == "scale") s.scale = detail::get_as<std::string>(sv, sk);
        else throw ValidationError("invalid config: unknown sweep key " + sk);
      }
      c.sweep = s;
    }
    else throw ValidationError("invalid config: unknown key " + key);
  }
  detail::validate_config(c);
  return c;
}

inline RunConfig config_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  return config_from_json(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_string(ss.str());
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["delta_c"] = c.params.delta_c;
  j["kappa"] = c.params.kappa;
  j["eta"] = c.params.eta;
  j["u0"] = c.params.u0;
  j["n_atoms"] = c.params.n_atoms;
  j["grid_points"] = c.params.grid_points;
  j["itp_dt"] = c.meanfield.itp_dt;
  j["tol_phi"] = c.meanfield.tol_phi;
  j["tol_alpha"] = c.meanfield.tol_alpha;
  j["mixing"] = c.meanfield.mixing;
  j["max_iters"] = c.meanfield.max_iters;
  j["refine"] = c.meanfield.refine;
  if (c.meanfield.frozen_alpha)
    j["frozen_alpha"] = {c.meanfield.frozen_alpha->real(), c.meanfield.frozen_alpha->imag()};
  j["subtract_mu"] = c.fluctuation.subtract_mu;
  j["project_condensate"] = c.fluctuation.project_condensate;
  j["max_condition"] = c.spectral.max_condition;
  j["tol_pair"] = c.depletion.tol_pair;
  j["tol_noise"] = c.depletion.tol_noise;
  j["tol_zero"] = c.depletion.tol_zero;
  if (!c.detunings.empty()) j["detunings"] = c.detunings;
  j["eta_follows_detuning"] = c.eta_follows_detuning;
  if (!c.times.empty()) j["times"] = c.times;
  j["nonneg_re_only"] = c.nonneg_re_only;
  j["oracle"] = c.oracle;
  j["verify_grid_points"] = c.verify_grid_points;
  if (c.sweep)
    j["sweep"] = {{"parameter", c.sweep->parameter}, {"from", c.sweep->from}, {"to", c.sweep->to},
                  {"points", c.sweep->points}, {"scale", c.sweep->scale}};
  return j;
}

inline nlohmann::json complex_pair(std::complex<double> z) { return nlohmann::json::array({z.real(), z.imag()}); }

/// Mean-field state with phi as [re, im] pairs.
inline nlohmann::json state_to_json(const MeanFieldState& st, const SystemParams& p) {
  nlohmann::json phi = nlohmann::json::array();
  for (Eigen::Index j = 0; j < st.phi.size(); ++j) phi.push_back(complex_pair(st.phi[j]));
  const auto& c = st.convergence;
  return {
      {"params",
       {{"delta_c", p.delta_c}, {"kappa", p.kappa}, {"eta", p.eta}, {"u0", p.u0}, {"n_atoms", p.n_atoms},
        {"grid_points", p.grid_points}}},
      {"converged", c.converged},
      {"heating_regime", st.heating_regime},
      {"alpha", complex_pair(st.alpha)},
      {"photon_number", st.intensity()},
      {"u_avg", st.u_avg},
      {"mu", st.mu},
      {"iterations", {{"split_step", c.split_step_iterations}, {"refine", c.refine_iterations}}},
      {"residuals",
       {{"phi_step", c.phi_step},
        {"alpha_step", c.alpha_step},
        {"self_consistency", c.self_consistency},
        {"eigen_residual", c.eigen_residual}}},
      {"phi", phi},
  };
}

inline MeanFieldState state_from_json(const nlohmann::json& j) {
  MeanFieldState st;
  try {
    const auto& phi = j.at("phi");
    st.phi.resize(static_cast<Eigen::Index>(phi.size()));
    for (std::size_t i = 0; i < phi.size(); ++i)
      st.phi[static_cast<Eigen::Index>(i)] = {phi[i].at(0).get<double>(), phi[i].at(1).get<double>()};
    st.alpha = {j.at("alpha").at(0).get<double>(), j.at("alpha").at(1).get<double>()};
    st.u_avg = j.at("u_avg").get<double>();
    st.mu = j.at("mu").get<double>();
    st.heating_regime = j.at("heating_regime").get<bool>();
    st.convergence.converged = j.at("converged").get<bool>();
    const auto& r = j.at("residuals");
    st.convergence.phi_step = r.at("phi_step").get<double>();
    st.convergence.alpha_step = r.at("alpha_step").get<double>();
    st.convergence.self_consistency = r.at("self_consistency").get<double>();
    st.convergence.eigen_residual = r.at("eigen_residual").get<double>();
    st.convergence.split_step_iterations = j.at("iterations").at("split_step").get<long>();
    st.convergence.refine_iterations = j.at("iterations").at("refine").get<long>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid state file: ") + e.what());
  }
  return st;
}

/// Row-major dump of M as [re, im] pairs.
inline nlohmann::json matrix_to_json(const FluctuationMatrix& fm) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index r = 0; r < fm.dim(); ++r)
    for (Eigen::Index c = 0; c < fm.dim(); ++c) data.push_back(complex_pair(fm.m(r, c)));
  return {{"dim", fm.dim()},
          {"grid_points", fm.ng},
          {"layout", "0: da, 1: da+, 2..Ng+1: dPsi, Ng+2..2Ng+1: dPsi+"},
          {"a_diag", complex_pair(fm.a_diag)},
          {"subtract_mu", fm.options.subtract_mu},
          {"project_condensate", fm.options.project_condensate},
          {"data", data}};
}

} // namespace bec_cavity

#endif // BEC_CAVITY_CONFIG_HPP
