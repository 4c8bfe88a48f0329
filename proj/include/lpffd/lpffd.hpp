#pragma once

#include "lpffd/arap.hpp"
#include "lpffd/baselines.hpp"
#include "lpffd/bench.hpp"
#include "lpffd/error.hpp"
#include "lpffd/ffd.hpp"
#include "lpffd/geometry.hpp"
#include "lpffd/image.hpp"
#include "lpffd/io.hpp"
#include "lpffd/metrics.hpp"
#include "lpffd/scenario.hpp"
#include "lpffd/session.hpp"
#include "lpffd/solver.hpp"
