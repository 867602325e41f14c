#pragma once

#include "admm.hpp"
#include "battery.hpp"
#include "core.hpp"
#include "fixedpoint.hpp"
#include "instances.hpp"
#include "io.hpp"
#include "metric_select.hpp"
#include "prox.hpp"
#include "residual.hpp"
