#ifndef BEC_CAVITY_BEC_CAVITY_HPP
#define BEC_CAVITY_BEC_CAVITY_HPP

#include "bec_cavity/errors.hpp"
#include "bec_cavity/params.hpp"
#include "bec_cavity/grid.hpp"
#include "bec_cavity/meanfield.hpp"
#include "bec_cavity/fluctuation.hpp"
#include "bec_cavity/spectral.hpp"
#include "bec_cavity/depletion.hpp"
#include "bec_cavity/result_table.hpp"
#include "bec_cavity/config.hpp"
#include "bec_cavity/sweep.hpp"
#include "bec_cavity/verify.hpp"

#endif // BEC_CAVITY_BEC_CAVITY_HPP
