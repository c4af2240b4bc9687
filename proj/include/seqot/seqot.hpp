#pragma once

#include "seqot/core.hpp"
#include "seqot/error.hpp"
#include "seqot/metrics.hpp"
#include "seqot/oracle.hpp"
#include "seqot/plans.hpp"
#include "seqot/random.hpp"
#include "seqot/rounding.hpp"
#include "seqot/scaling.hpp"
#include "seqot/sinkhorn.hpp"
#include "seqot/types.hpp"
