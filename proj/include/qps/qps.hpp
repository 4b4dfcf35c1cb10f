// Umbrella header.

#ifndef QPS_QPS_HPP
#define QPS_QPS_HPP

#include "qps/accumulator.hpp"
#include "qps/acceptance.hpp"
#include "qps/commutation.hpp"
#include "qps/config.hpp"
#include "qps/core.hpp"
#include "qps/density.hpp"
#include "qps/estimators.hpp"
#include "qps/oracle.hpp"
#include "qps/parallel.hpp"
#include "qps/runner.hpp"
#include "qps/sampler.hpp"
#include "qps/symmetrization.hpp"
#include "qps/virial.hpp"

#endif  // QPS_QPS_HPP
