// Runs the acceptance criteria; one line per criterion.
#include "fbsde/acceptance.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
    int failed = 0;
    for (int id : ids.empty() ? fbsde::acceptance_ids() : ids) {
        fbsde::CriterionResult r = fbsde::run_criterion(id);
        std::printf("[%s] %2d %s (%.1fs): %s\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds,
                    r.detail.c_str());
        std::fflush(stdout);
        if (!r.passed) ++failed;
    }
    std::printf("%d criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
