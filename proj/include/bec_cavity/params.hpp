#ifndef BEC_CAVITY_PARAMS_HPP
#define BEC_CAVITY_PARAMS_HPP

// Unit system: hbar = 1, frequencies and energies in the recoil frequency
// omega_R, lengths in 1/k, times in 1/omega_R. The kinetic operator is
// -d^2/dx^2 and one lambda/2 cell of the lattice is x in [0, pi).

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "bec_cavity/errors.hpp"

namespace bec_cavity {

struct SystemParams {
  double delta_c = -1000.0;   ///< cavity detuning, pump minus cavity frequency
  double kappa = 100.0;       ///< cavity half-linewidth, > 0
  double eta = 1000.0;        ///< pump strength
  double u0 = 0.0;            ///< single-atom light shift at an antinode
  std::int64_t n_atoms = 1000;
  int grid_points = 200;

  friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

/// Returns the parameters unchanged, or throws ValidationError listing every
/// violated invariant.
inline SystemParams validate(const SystemParams& p) {
  std::vector<std::string> problems;
  auto finite = [&](double v, const char* name) {
    if (!std::isfinite(v)) problems.push_back(std::string(name) + " must be finite");
  };
  finite(p.delta_c, "delta_c");
  finite(p.kappa, "kappa");
  finite(p.eta, "eta");
  finite(p.u0, "u0");
  if (std::isfinite(p.kappa) && !(p.kappa > 0.0)) problems.emplace_back("kappa must be positive");
  if (p.n_atoms < 1) problems.emplace_back("n_atoms must be >= 1");
  if (p.grid_points < 8 || p.grid_points % 2 != 0)
    problems.emplace_back("grid_points must be even >= 8");

  if (!problems.empty()) {
    std::ostringstream os;
    os << "invalid parameters: ";
    for (std::size_t i = 0; i < problems.size(); ++i) os << (i ? "; " : "") << problems[i];
    throw ValidationError(os.str());
  }
  return p;
}

/// Parameter set of the spectrum figure: detuning -1000, kappa 100, eta 1000, N 1000.
inline SystemParams figure_params(double u0, int grid_points = 200) {
  SystemParams p;
  p.delta_c = -1000.0;
  p.kappa = 100.0;
  p.eta = 1000.0;
  p.u0 = u0;
  p.n_atoms = 1000;
  p.grid_points = grid_points;
  return p;
}

} // namespace bec_cavity

#endif // BEC_CAVITY_PARAMS_HPP
