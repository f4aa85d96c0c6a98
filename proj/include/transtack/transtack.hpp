#pragma once

#include "transtack/errors.hpp"
#include "transtack/experiments.hpp"
#include "transtack/io.hpp"
#include "transtack/neuralnet.hpp"
#include "transtack/random.hpp"
#include "transtack/stacking.hpp"
#include "transtack/timeseries.hpp"
