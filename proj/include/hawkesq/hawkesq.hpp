#pragma once

#include "asymptotics.hpp"
#include "cluster.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "harness.hpp"
#include "inversion.hpp"
#include "markov_transform.hpp"
#include "model.hpp"
#include "moments.hpp"
#include "parallel.hpp"
#include "simulator.hpp"
#include "special_functions.hpp"
