#pragma once

#include "actuation.hpp"
#include "config.hpp"
#include "dft.hpp"
#include "dual_link.hpp"
#include "emit.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "measured.hpp"
#include "metrics.hpp"
#include "optimizer.hpp"
#include "resonator.hpp"
