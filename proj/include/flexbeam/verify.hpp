// Acceptance suite: one entry per criterion, each printing a pass/fail line.
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace flexbeam {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string details;
};

struct VerifyOptions {
    std::string data_dir = "data";
    std::string out_dir = "acceptance_out";
    bool quick = false;  ///< reduced grids/horizons for smoke runs
};

std::vector<CriterionResult> run_acceptance(const VerifyOptions& opt, std::ostream& log);

/// Convenience for main(): runs, prints, returns the number of failures.
int acceptance_main(const VerifyOptions& opt, std::ostream& log);

}  // namespace flexbeam
