#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hacklab/bound_report.hpp"

namespace hacklab::app {

// Suites: all, pairwise, gradient, bt_bound, resets, fd_estimator.
bool is_suite(const std::string& name);
const std::vector<std::string>& suite_names();

// Runs the bound checks of one suite on the built-in instances. Each report
// draws from its own stream, so a report's numbers do not depend on which
// suite selection produced it.
std::vector<BoundReport> run_suite(const std::string& suite, std::size_t n, std::uint64_t seed);

}  // namespace hacklab::app
