#pragma once

#include "linucb/rng.hpp"
#include "linucb/eigencore.hpp"
#include "linucb/special_functions.hpp"
#include "linucb/bandit.hpp"
#include "linucb/inference.hpp"
#include "linucb/diagnostics.hpp"
#include "linucb/harness.hpp"
#include "linucb/export.hpp"
