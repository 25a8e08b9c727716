#pragma once

// Tessellation-localized transfer learning for nonparametric regression:
// source Nadaraya-Watson fit, cellwise affine transfer estimation on
// axis-aligned grid tessellations, data-driven tessellation selection
// (ERM / median-of-means / simulated annealing), and a benchmark harness.

#include "tl2/core.hpp"
#include "tl2/diagnostics.hpp"
#include "tl2/io.hpp"
#include "tl2/selection.hpp"
#include "tl2/source.hpp"
#include "tl2/synth.hpp"
#include "tl2/tessellation.hpp"
#include "tl2/transfer.hpp"
