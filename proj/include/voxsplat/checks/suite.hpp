// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace voxsplat::checks {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

/// Runs acceptance criteria 1 to 9 in order. Tolerances are fixed in the
/// implementation; `seed` drives every randomized case.
std::vector<CriterionResult> run_acceptance_suite(std::uint64_t seed = 0);

/// "PASS [n] name (detail, 1.23 s)" per line.
void print_results(std::ostream& out, const std::vector<CriterionResult>& results);

}  // namespace voxsplat::checks
