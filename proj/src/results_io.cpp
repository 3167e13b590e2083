// SPDX-License-Identifier: Apache-2.0

#include "irsnoma/results_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace irsnoma::io
{

std::string formatNumber(double v)
{
    if (!std::isfinite(v))
        throw std::invalid_argument("formatNumber: non-finite value");
    if (v == 0.0)
        return "0";
    // Round to 6 significant digits first; the exponent of the rounded value
    // fixes the number of decimals.
    char sci[32];
    std::snprintf(sci, sizeof sci, "%.5e", v);
    const double rounded = std::strtod(sci, nullptr);
    const char *e = std::strchr(sci, 'e');
    const int exponent = std::atoi(e + 1);
    const int decimals = std::max(0, 5 - exponent);
    char out[400];
    std::snprintf(out, sizeof out, "%.*f", decimals, rounded);
    return out;
}

namespace
{

std::vector<std::string> splitLine(const std::string &line)
{
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ','))
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

double parseDouble(const std::string &s, int line)
{
    char *end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0')
        throw std::runtime_error("line " + std::to_string(line) + ": '" + s + "' is not a number");
    return v;
}

std::uint64_t parseSeed(const std::string &s, int line)
{
    char *end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0')
        throw std::runtime_error("line " + std::to_string(line) + ": '" + s + "' is not an unsigned integer");
    return v;
}

std::vector<std::vector<std::string>> parseTable(const std::string &text, const std::string &header)
{
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line) || line != header)
        throw std::runtime_error("line 1: expected header '" + header + "'");
    const std::size_t width = splitLine(header).size();
    std::vector<std::vector<std::string>> out;
    int n = 1;
    while (std::getline(ss, line))
    {
        ++n;
        if (line.empty())
            continue;
        auto cells = splitLine(line);
        if (cells.size() != width)
            throw std::runtime_error("line " + std::to_string(n) + ": expected " + std::to_string(width) +
                                     " fields, found " + std::to_string(cells.size()));
        out.push_back(std::move(cells));
    }
    return out;
}

const std::string kResultsHeader = "scheme,param_name,param_value,seed,sum_rate_bps,run_status";
const std::string kSummaryHeader = "scheme,param_value,mean_bps,p05_bps,p95_bps,excluded_runs";
const std::string kCdfHeader = "scheme,param_value,sum_rate_bps,cdf";

} // namespace

std::string resultsCsv(const harness::ResultTable &table)
{
    std::string out = kResultsHeader + "\n";
    for (const auto &r : table.rows)
        out += r.scheme + ',' + r.paramName + ',' + formatNumber(r.paramValue) + ',' + std::to_string(r.seed) + ',' +
               formatNumber(r.sumRate) + ',' + harness::runStatusName(r.status) + '\n';
    return out;
}

std::string summaryCsv(const std::vector<harness::SummaryRow> &rows)
{
    std::string out = kSummaryHeader + "\n";
    for (const auto &r : rows)
        out += r.scheme + ',' + formatNumber(r.paramValue) + ',' + formatNumber(r.mean) + ',' + formatNumber(r.p05) +
               ',' + formatNumber(r.p95) + ',' + std::to_string(r.excluded) + '\n';
    return out;
}

std::string cdfCsv(const std::vector<harness::CdfRow> &rows)
{
    std::string out = kCdfHeader + "\n";
    for (const auto &r : rows)
        out += r.scheme + ',' + formatNumber(r.paramValue) + ',' + formatNumber(r.sumRate) + ',' +
               formatNumber(r.cdf) + '\n';
    return out;
}

std::string readFile(const std::filesystem::path &path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open " + path.string() + " for reading");
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void writeFile(const std::filesystem::path &path, const std::string &text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << text;
    os.close();
    if (!os)
        throw std::runtime_error("write failed for " + path.string());
}

void emitResults(const harness::ResultTable &table, const std::filesystem::path &dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
    writeFile(dir / "results.csv", resultsCsv(table));
    writeFile(dir / "summary.csv", summaryCsv(harness::summarize(table)));
    writeFile(dir / "cdf.csv", cdfCsv(harness::empiricalCdf(table)));
}

harness::ResultTable parseResultsCsv(const std::string &text)
{
    harness::ResultTable t;
    int line = 1;
    for (const auto &c : parseTable(text, kResultsHeader))
    {
        ++line;
        harness::ResultRow r;
        r.scheme = c[0];
        r.paramName = c[1];
        r.paramValue = parseDouble(c[2], line);
        r.seed = parseSeed(c[3], line);
        r.sumRate = parseDouble(c[4], line);
        try
        {
            r.status = harness::parseRunStatus(c[5]);
        }
        catch (const std::invalid_argument &e)
        {
            throw std::runtime_error("line " + std::to_string(line) + ": " + e.what());
        }
        t.rows.push_back(std::move(r));
    }
    return t;
}

harness::ResultTable readResults(const std::filesystem::path &path)
{
    try
    {
        return parseResultsCsv(readFile(path));
    }
    catch (const std::runtime_error &e)
    {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

std::vector<harness::SummaryRow> parseSummaryCsv(const std::string &text)
{
    std::vector<harness::SummaryRow> out;
    int line = 1;
    for (const auto &c : parseTable(text, kSummaryHeader))
    {
        ++line;
        harness::SummaryRow r;
        r.scheme = c[0];
        r.paramValue = parseDouble(c[1], line);
        r.mean = parseDouble(c[2], line);
        r.p05 = parseDouble(c[3], line);
        r.p95 = parseDouble(c[4], line);
        r.excluded = static_cast<int>(parseSeed(c[5], line));
        out.push_back(r);
    }
    return out;
}

} // namespace irsnoma::io
