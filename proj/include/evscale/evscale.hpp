#pragma once

#include "evscale/asymptotics.hpp"
#include "evscale/boxcox.hpp"
#include "evscale/csv.hpp"
#include "evscale/data.hpp"
#include "evscale/error.hpp"
#include "evscale/gev.hpp"
#include "evscale/model.hpp"
#include "evscale/optimize.hpp"
#include "evscale/parents.hpp"
#include "evscale/profile.hpp"
#include "evscale/returns.hpp"
#include "evscale/sampler.hpp"
#include "evscale/stats.hpp"
#include "evscale/svg.hpp"
