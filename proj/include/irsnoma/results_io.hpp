// SPDX-License-Identifier: Apache-2.0
//
// CSV output of Monte-Carlo tables. Numbers are written in plain decimal with
// '.' as separator and exactly 6 significant digits; seeds as full integers.
//
//   results.csv  scheme,param_name,param_value,seed,sum_rate_bps,run_status
//   summary.csv  scheme,param_value,mean_bps,p05_bps,p95_bps,excluded_runs
//   cdf.csv      scheme,param_value,sum_rate_bps,cdf

#pragma once

#include "irsnoma/harness.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace irsnoma::io
{

// 6 significant digits, no exponent: 12345678 -> "12345700", 0.000123456789 -> "0.000123457".
std::string formatNumber(double v);

std::string resultsCsv(const harness::ResultTable &table);
std::string summaryCsv(const std::vector<harness::SummaryRow> &rows);
std::string cdfCsv(const std::vector<harness::CdfRow> &rows);

// Writes the three files into dir (created if missing). Throws std::runtime_error
// naming the offending path on any I/O failure.
void emitResults(const harness::ResultTable &table, const std::filesystem::path &dir);

// Inverse of resultsCsv. Throws std::runtime_error with the line number on malformed input.
harness::ResultTable parseResultsCsv(const std::string &text);
harness::ResultTable readResults(const std::filesystem::path &path);

// Inverse of summaryCsv (included counts are not stored and read back as 0).
std::vector<harness::SummaryRow> parseSummaryCsv(const std::string &text);

std::string readFile(const std::filesystem::path &path);
void writeFile(const std::filesystem::path &path, const std::string &text);

} // namespace irsnoma::io
