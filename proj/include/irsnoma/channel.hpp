// SPDX-License-Identifier: Apache-2.0
//
// Seeded generation of fading realizations from the scenario geometry.

#pragma once

#include "irsnoma/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace irsnoma::channel
{

// Linear gain with a 30 dB reference loss at 1 m. Throws on d <= 0.
double pathloss(double d, double exponent);

// Deterministic 64-bit mixer used to derive independent substreams.
std::uint64_t mixSeed(std::uint64_t a, std::uint64_t b);

// Direct links are Rayleigh, BS-surface links Rician with a ULA line-of-sight
// term, surface-user links Rayleigh. Each (link, subchannel) draws from its own
// substream, so element m of a surface vector does not depend on numElements.
// Throws std::invalid_argument for coincident nodes or an invalid config.
ChannelSet generateChannels(const NetworkConfig &cfg, std::uint64_t seed);

// Unit-modulus line-of-sight response of the surface seen from BS j.
Eigen::VectorXcd bsIrsLineOfSight(const NetworkConfig &cfg, int j);

// JSON dump of a realization; see README for the schema.
std::string channelsToJson(const ChannelSet &ch);
void writeChannels(const ChannelSet &ch, const std::filesystem::path &path);
ChannelSet channelsFromJson(const std::string &text);

} // namespace irsnoma::channel
