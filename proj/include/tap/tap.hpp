#pragma once

#include "tap/certify.hpp"
#include "tap/contraction.hpp"
#include "tap/errors.hpp"
#include "tap/gens.hpp"
#include "tap/instance.hpp"
#include "tap/matching.hpp"
#include "tap/oracle.hpp"
#include "tap/rational.hpp"
#include "tap/solver.hpp"
