#pragma once

#include "tsync/clock.hpp"
#include "tsync/config.hpp"
#include "tsync/error.hpp"
#include "tsync/experiment.hpp"
#include "tsync/hierarchy.hpp"
#include "tsync/messages.hpp"
#include "tsync/netsim.hpp"
#include "tsync/protocol.hpp"
#include "tsync/random.hpp"
#include "tsync/scfr.hpp"
#include "tsync/simulation.hpp"
