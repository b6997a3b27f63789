#pragma once

#include "optdesign/allocation.hpp"
#include "optdesign/config.hpp"
#include "optdesign/errors.hpp"
#include "optdesign/ew.hpp"
#include "optdesign/feasible_region.hpp"
#include "optdesign/fisher.hpp"
#include "optdesign/glm.hpp"
#include "optdesign/mlm.hpp"
#include "optdesign/numkernel.hpp"
#include "optdesign/optimizer.hpp"
#include "optdesign/rng.hpp"
#include "optdesign/rounding.hpp"
#include "optdesign/simharness.hpp"
