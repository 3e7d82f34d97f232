#pragma once

#include "ccmsim/sim_core.hpp"
#include "ccmsim/types.hpp"
#include "ccmsim/fabric.hpp"
#include "ccmsim/ring_stream.hpp"
#include "ccmsim/ring_explorer.hpp"
#include "ccmsim/workload.hpp"
#include "ccmsim/ccm.hpp"
#include "ccmsim/host.hpp"
#include "ccmsim/system.hpp"
#include "ccmsim/metrics.hpp"
#include "ccmsim/presets.hpp"
#include "ccmsim/config.hpp"
#include "ccmsim/experiment.hpp"
