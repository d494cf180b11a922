#pragma once

#include "smallball/closed_forms.hpp"
#include "smallball/ensemble.hpp"
#include "smallball/error.hpp"
#include "smallball/harness.hpp"
#include "smallball/oracle.hpp"
#include "smallball/parallel.hpp"
#include "smallball/random.hpp"
#include "smallball/samplers.hpp"
#include "smallball/small_dev.hpp"
#include "smallball/spectrum.hpp"
#include "smallball/stats.hpp"
