// SPDX-License-Identifier: MIT
#pragma once

#include <string>
#include <vector>

namespace fbsde {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

/// Ids 1..11.
std::vector<int> acceptance_ids();

/// Runs one criterion. Exceptions are caught and reported as failures.
CriterionResult run_criterion(int id);

/// All criteria when `ids` is empty.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids = {});

} // namespace fbsde
