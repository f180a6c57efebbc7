#pragma once

#include "pacrr/model.hpp"

#include <iosfwd>

namespace pacrr {

/// Text checkpoint: a header with the config as key=value lines, then each
/// tensor as "tensor <name> <d0>x<d1>..." followed by one line of hex-float
/// values, so writing and reading round-trip bit for bit.
///
///   pacrr-checkpoint 1
///   l_q=16
///   ...
///   tensors=<count>
///   tensor conv2.weight 2x2x16
///   0x1.99999999999ap-4 ...
///   end
void write_checkpoint(std::ostream& out, const ModelParams& params);
ModelParams read_checkpoint(std::istream& in);

}  // namespace pacrr
