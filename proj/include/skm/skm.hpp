#pragma once

#include "skm/assignment.hpp"
#include "skm/clustering.hpp"
#include "skm/dataset.hpp"
#include "skm/diagnostics.hpp"
#include "skm/error.hpp"
#include "skm/geometry.hpp"
#include "skm/harness.hpp"
#include "skm/rng.hpp"
#include "skm/seeding.hpp"
#include "skm/stochastic.hpp"
#include "skm/trace.hpp"
#include "skm/version.hpp"
