#pragma once

// Umbrella header for the dual-dynamics planning toolkit.

#include "ddn/adam.hpp"
#include "ddn/baselines.hpp"
#include "ddn/checkpoint.hpp"
#include "ddn/dataset.hpp"
#include "ddn/errors.hpp"
#include "ddn/eval.hpp"
#include "ddn/gradcheck.hpp"
#include "ddn/graph.hpp"
#include "ddn/io.hpp"
#include "ddn/metrics.hpp"
#include "ddn/model.hpp"
#include "ddn/planner.hpp"
#include "ddn/rng.hpp"
#include "ddn/synth.hpp"
#include "ddn/tensor.hpp"
#include "ddn/train.hpp"
#include "ddn/walkthrough.hpp"
