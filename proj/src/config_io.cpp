// SPDX-License-Identifier: Apache-2.0

#include "irsnoma/config_io.hpp"

#include "irsnoma/results_io.hpp"

#include <json.hpp>

#include <stdexcept>

namespace irsnoma::io
{

namespace
{

using nlohmann::json;

[[noreturn]] void bad(const std::string &key, const std::string &what)
{
    throw std::invalid_argument("config key '" + key + "': " + what);
}

double number(const json &v, const std::string &key)
{
    if (!v.is_number())
        bad(key, "expected a number");
    return v.get<double>();
}

int integer(const json &v, const std::string &key)
{
    if (!v.is_number_integer())
        bad(key, "expected an integer");
    return v.get<int>();
}

Vec3 point(const json &v, const std::string &key)
{
    if (!v.is_array() || v.size() != 3)
        bad(key, "expected [x, y, z]");
    return {number(v[0], key), number(v[1], key), number(v[2], key)};
}

std::vector<Vec3> points(const json &v, const std::string &key)
{
    if (!v.is_array())
        bad(key, "expected an array of [x, y, z]");
    std::vector<Vec3> out;
    for (const auto &p : v)
        out.push_back(point(p, key));
    return out;
}

json pointJson(const Vec3 &p) { return json::array({p[0], p[1], p[2]}); }

} // namespace

NetworkConfig configFromJson(const std::string &text)
{
    json doc;
    try
    {
        doc = json::parse(text);
    }
    catch (const json::parse_error &e)
    {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw std::invalid_argument("config must be a JSON object");

    NetworkConfig cfg;
    bool usersGiven = false;
    bool bsGiven = false;
    for (const auto &[key, v] : doc.items())
    {
        if (key == "numUsers")
            cfg.numUsers = integer(v, key);
        else if (key == "numBs")
            cfg.numBs = integer(v, key);
        else if (key == "numSubchannels")
            cfg.numSubchannels = integer(v, key);
        else if (key == "numElements")
            cfg.numElements = integer(v, key);
        else if (key == "maxClusterSize")
            cfg.maxClusterSize = integer(v, key);
        else if (key == "subchannelsPerBs")
            cfg.subchannelsPerBs = integer(v, key);
        else if (key == "maxPowerIters")
            cfg.maxPowerIters = integer(v, key);
        else if (key == "maxScaIters")
            cfg.maxScaIters = integer(v, key);
        else if (key == "maxOuterIters")
            cfg.maxOuterIters = integer(v, key);
        else if (key == "bandwidth")
            cfg.bandwidth = number(v, key);
        else if (key == "minRate")
            cfg.minRate = number(v, key);
        else if (key == "tolerance")
            cfg.tolerance = number(v, key);
        else if (key == "ricianFactor")
            cfg.ricianFactor = number(v, key);
        else if (key == "noisePowerDbm")
            cfg.noisePower = dbmToWatt(number(v, key));
        else if (key == "maxBsPowerDbm")
            cfg.maxBsPower = dbmToWatt(number(v, key));
        else if (key == "interThresholdDbm")
            cfg.interThreshold = dbmToWatt(number(v, key));
        else if (key == "userPositions")
        {
            cfg.userPositions = points(v, key);
            usersGiven = true;
        }
        else if (key == "bsPositions")
        {
            cfg.bsPositions = points(v, key);
            bsGiven = true;
        }
        else if (key == "irsPosition")
            cfg.irsPosition = point(v, key);
        else if (key == "exponents")
        {
            if (!v.is_object())
                bad(key, "expected an object");
            for (const auto &[sub, x] : v.items())
            {
                const std::string name = key + "." + sub;
                if (sub == "direct")
                    cfg.exponents.direct = number(x, name);
                else if (sub == "bsIrs")
                    cfg.exponents.bsIrs = number(x, name);
                else if (sub == "irsUser")
                    cfg.exponents.irsUser = number(x, name);
                else
                    bad(name, "unknown key");
            }
        }
        else
            bad(key, "unknown key");
    }

    // Explicit positions are kept even when their count is wrong, so validate reports it.
    if (!usersGiven)
        cfg.userPositions.clear();
    if (!bsGiven)
        cfg.bsPositions.clear();
    NetworkConfig geom = cfg;
    applyDefaultGeometry(geom);
    if (!usersGiven)
        cfg.userPositions = geom.userPositions;
    if (!bsGiven)
        cfg.bsPositions = geom.bsPositions;
    cfg.validate();
    return cfg;
}

NetworkConfig loadConfig(const std::filesystem::path &path)
{
    const std::string text = readFile(path);
    try
    {
        return configFromJson(text);
    }
    catch (const std::invalid_argument &e)
    {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

std::string configToJson(const NetworkConfig &cfg)
{
    json doc;
    doc["numUsers"] = cfg.numUsers;
    doc["numBs"] = cfg.numBs;
    doc["numSubchannels"] = cfg.numSubchannels;
    doc["numElements"] = cfg.numElements;
    doc["maxClusterSize"] = cfg.maxClusterSize;
    doc["subchannelsPerBs"] = cfg.subchannelsPerBs;
    doc["maxPowerIters"] = cfg.maxPowerIters;
    doc["maxScaIters"] = cfg.maxScaIters;
    doc["maxOuterIters"] = cfg.maxOuterIters;
    doc["bandwidth"] = cfg.bandwidth;
    doc["minRate"] = cfg.minRate;
    doc["tolerance"] = cfg.tolerance;
    doc["ricianFactor"] = cfg.ricianFactor;
    doc["noisePowerDbm"] = wattToDbm(cfg.noisePower);
    doc["maxBsPowerDbm"] = wattToDbm(cfg.maxBsPower);
    doc["interThresholdDbm"] = wattToDbm(cfg.interThreshold);
    json users = json::array();
    for (const auto &p : cfg.userPositions)
        users.push_back(pointJson(p));
    json bss = json::array();
    for (const auto &p : cfg.bsPositions)
        bss.push_back(pointJson(p));
    doc["userPositions"] = users;
    doc["bsPositions"] = bss;
    doc["irsPosition"] = pointJson(cfg.irsPosition);
    doc["exponents"] = {{"direct", cfg.exponents.direct},
                        {"bsIrs", cfg.exponents.bsIrs},
                        {"irsUser", cfg.exponents.irsUser}};
    return doc.dump(2) + "\n";
}

} // namespace irsnoma::io
