#ifndef TVDYN_TVDYN_HPP
#define TVDYN_TVDYN_HPP

// Everything: model, fits, baselines, data generators, I/O and benchmarks.

#include "bench.hpp"
#include "checkpoint.hpp"
#include "csv_io.hpp"
#include "datagen.hpp"
#include "engine.hpp"
#include "lssm.hpp"
#include "rotation.hpp"
#include "switching.hpp"

#endif  // TVDYN_TVDYN_HPP
