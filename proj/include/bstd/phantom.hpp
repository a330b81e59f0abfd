#pragma once

#include <cstdint>

#include "bstd/image.hpp"

namespace bstd {

/// Synthetic radiograph: a smooth soft-tissue background with a few bright,
/// textured, capsule-shaped bones and mild noise. Deterministic for a given
/// size and seed; values lie in [0,1]. Used by the benchmark and tests.
Image xray_phantom(int width, int height, std::uint32_t seed = 1);

} // namespace bstd
