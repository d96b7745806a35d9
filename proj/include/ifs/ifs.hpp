#pragma once

// Umbrella header for the library (everything except the TOML loader in
// ifs/config.hpp, which needs toml++).

#include "ifs/error.hpp"
#include "ifs/point.hpp"
#include "ifs/expr.hpp"
#include "ifs/flow.hpp"
#include "ifs/scenario.hpp"
#include "ifs/impulse.hpp"
#include "ifs/parallel.hpp"
#include "ifs/nonwandering.hpp"
#include "ifs/quotient.hpp"
#include "ifs/measure.hpp"
#include "ifs/builtin.hpp"
