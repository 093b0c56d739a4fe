#pragma once

#include "bipartite.hpp"
#include "degrees.hpp"
#include "edgeworth.hpp"
#include "error.hpp"
#include "maxent.hpp"
#include "oracle.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "sampler.hpp"
