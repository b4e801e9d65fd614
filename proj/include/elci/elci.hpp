#pragma once

// Umbrella header.

#include "elci/ci_methods.hpp"
#include "elci/config.hpp"
#include "elci/core.hpp"
#include "elci/data_io.hpp"
#include "elci/el_solver.hpp"
#include "elci/experiments.hpp"
#include "elci/influence.hpp"
#include "elci/models.hpp"
#include "elci/sampling.hpp"
#include "elci/stats.hpp"
#include "elci/version.hpp"
