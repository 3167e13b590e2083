// SPDX-License-Identifier: Apache-2.0
//
// JSON scenario files. Keys mirror NetworkConfig; every key is optional and
// missing keys keep the defaults. Powers are given in dBm:
//
//   numUsers numBs numSubchannels numElements maxClusterSize subchannelsPerBs
//   maxPowerIters maxScaIters maxOuterIters            integers
//   bandwidth (Hz) minRate (bit/s) tolerance ricianFactor (linear)
//   noisePowerDbm maxBsPowerDbm interThresholdDbm
//   userPositions bsPositions  arrays of [x, y, z]; irsPosition [x, y, z]
//   exponents {direct, bsIrs, irsUser}
//
// Positions default to the standard geometry for the configured sizes.

#pragma once

#include "irsnoma/types.hpp"

#include <filesystem>
#include <string>

namespace irsnoma::io
{

// Throws std::invalid_argument naming the key on unknown keys, wrong types or
// a configuration that fails NetworkConfig::validate.
NetworkConfig configFromJson(const std::string &text);
NetworkConfig loadConfig(const std::filesystem::path &path);

std::string configToJson(const NetworkConfig &cfg);

} // namespace irsnoma::io
