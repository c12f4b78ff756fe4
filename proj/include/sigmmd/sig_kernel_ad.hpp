#pragma once

#include <vector>

#include "sigmmd/sig_kernel.hpp"
#include "sigmmd/tape.hpp"

namespace sigmmd {

// Differentiable signature kernel of one path pair. Channels are column
// vector Values (points x 1), one per path dimension; the two paths may have
// different lengths but must have the same channel count. Forward runs the
// plain dynamic program. Backward recomputes the level stack for this pair
// only, then chains the increment adjoint through the static kernel into the
// channel values, so peak memory stays proportional to one pair.
Value sig_kernel_pair(Tape& tape, const std::vector<Value>& x_channels,
                      const std::vector<Value>& y_channels, const SigKernelConfig& cfg);

}  // namespace sigmmd
