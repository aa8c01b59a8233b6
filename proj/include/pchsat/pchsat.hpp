#ifndef PCHSAT_PCHSAT_HPP
#define PCHSAT_PCHSAT_HPP

#include "pchsat/cf_solver.hpp"
#include "pchsat/common.hpp"
#include "pchsat/decomp.hpp"
#include "pchsat/formula.hpp"
#include "pchsat/lpcore.hpp"
#include "pchsat/oracle.hpp"
#include "pchsat/prob_solver.hpp"
#include "pchsat/reductions.hpp"
#include "pchsat/scm.hpp"

#endif  // PCHSAT_PCHSAT_HPP
