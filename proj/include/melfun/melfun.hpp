#pragma once

#include "melfun/adaptive.hpp"
#include "melfun/complex_gamma.hpp"
#include "melfun/decay.hpp"
#include "melfun/error_model.hpp"
#include "melfun/errors.hpp"
#include "melfun/estimator.hpp"
#include "melfun/functionals.hpp"
#include "melfun/mellin.hpp"
#include "melfun/quadrature.hpp"
#include "melfun/report_io.hpp"
#include "melfun/rng.hpp"
#include "melfun/simulation.hpp"
#include "melfun/util.hpp"
