#pragma once

#include "fracint/diffusive.hpp"
#include "fracint/expsum.hpp"
#include "fracint/fastconv.hpp"
#include "fracint/fractional_order.hpp"
#include "fracint/laguerre.hpp"
#include "fracint/oracle.hpp"
#include "fracint/sampled_function.hpp"
#include "fracint/time_grid.hpp"
#include "fracint/transformation.hpp"
