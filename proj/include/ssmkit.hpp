#ifndef SSMKIT_HPP
#define SSMKIT_HPP

#include "ssmkit/error.hpp"
#include "ssmkit/multi_index.hpp"
#include "ssmkit/poly_map.hpp"
#include "ssmkit/spectral.hpp"
#include "ssmkit/system.hpp"
#include "ssmkit/mech.hpp"
#include "ssmkit/ssm.hpp"
#include "ssmkit/trig_series.hpp"
#include "ssmkit/fourier_taylor.hpp"
#include "ssmkit/forced.hpp"
#include "ssmkit/integrate.hpp"
#include "ssmkit/reduce.hpp"
#include "ssmkit/reference_systems.hpp"
#include "ssmkit/io.hpp"
#include "ssmkit/demos.hpp"

#endif  // SSMKIT_HPP
