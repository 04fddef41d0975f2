#pragma once

#include <iosfwd>
#include <string>

#include "sptest/harness.hpp"
#include "sptest/model.hpp"
#include "sptest/report.hpp"
#include "sptest/solvers.hpp"

namespace sptest {

std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const std::string& text);

std::string constants_to_json(const DesignConstants& c);
DesignConstants constants_from_json(const std::string& text);

std::string report_to_json(const TestReport& r);
std::string support_to_json(const SupportSet& s);
std::string risk_to_json(const RiskEstimate& r);

/// Binary dataset container: magic "SPTD", u32 version=1, u64 n, u64 p,
/// X row-major f64 little-endian, then Y, then theta*, then u64 seed.
void write_dataset(const RegressionSample& sample, const std::string& path);
RegressionSample read_dataset(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace sptest
