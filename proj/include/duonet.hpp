#pragma once

#include "duonet/barycenter.hpp"
#include "duonet/config.hpp"
#include "duonet/core.hpp"
#include "duonet/diagnostics.hpp"
#include "duonet/experiment.hpp"
#include "duonet/graph.hpp"
#include "duonet/oracles.hpp"
#include "duonet/rng.hpp"
#include "duonet/solver_det.hpp"
#include "duonet/solver_stoch.hpp"
