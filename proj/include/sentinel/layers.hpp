#pragma once

#include <cstdint>
#include <vector>

#include "sentinel/signal.hpp"

namespace sentinel {

Signal2D relu(const Signal2D& x);
// grad through y = relu(x): passes grad_y where x > 0.
Signal2D relu_backward(const Signal2D& x, const Signal2D& grad_y);

// Channel-wise (spatial) dropout: each channel is dropped as a whole with
// probability `rate`; kept channels are scaled by 1/(1-rate) so expectations
// match inference, where this is the identity.
struct ChannelMask {
  std::vector<std::uint8_t> keep;  // per channel
  double scale = 1.0;              // 1/(1-rate)
};
ChannelMask make_channel_mask(int d, double rate, SplitMix64& rng);
Signal2D apply_channel_mask(const Signal2D& x, const ChannelMask& m);
// Same masking applied to the upstream gradient.
Signal2D apply_channel_mask_backward(const Signal2D& grad_y, const ChannelMask& m);
// One-shot form: identity when training is false or rate == 0.
Signal2D spatial_dropout(const Signal2D& x, double rate, bool training, std::uint64_t seed);

// Non-overlapping temporal mean pooling by factor s; output length ceil(T/s),
// a short final group is averaged over its true length.
Signal2D temporal_avg_pool(const Signal2D& x, int s);
Signal2D temporal_avg_pool_backward(std::int64_t T_in, const Signal2D& grad_y, int s);

// Sample-and-hold upsampling by factor s; output length T*s.
Signal2D upsample_hold(const Signal2D& x, int s);
Signal2D upsample_hold_backward(const Signal2D& grad_y, int s);

}  // namespace sentinel
