#pragma once

#include "hybridkinetics/error.hpp"
#include "hybridkinetics/rng.hpp"
#include "hybridkinetics/network.hpp"
#include "hybridkinetics/conservation.hpp"
#include "hybridkinetics/dsl.hpp"
#include "hybridkinetics/trajectory.hpp"
#include "hybridkinetics/ssa.hpp"
#include "hybridkinetics/ode.hpp"
#include "hybridkinetics/pdmp.hpp"
#include "hybridkinetics/models.hpp"
#include "hybridkinetics/ensemble.hpp"
#include "hybridkinetics/commands.hpp"
