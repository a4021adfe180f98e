// SPDX-License-Identifier: MIT
//
// Acceptance gate: runs every stated correctness criterion end to end and
// prints one PASS/FAIL line per criterion with its timing and measured
// numbers. Optional arguments select a subset by index or id. Exit code 0
// when everything selected passed, 1 on any failure, 2 if nothing ran.

#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#include "cylas/verify.hpp"

int main(int argc, char** argv) {
    cylas::VerifyConfig cfg;
    cfg.out_root = "acceptance_out";

    std::vector<std::string> only;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) {
            cfg.out_root = argv[++i];
        } else if (std::strcmp(argv[i], "--help") == 0) {
            std::cout << "usage: cylas_acceptance [--out DIR] [criterion ...]\n"
                         "criteria may be given as indices (1..12) or ids\n"
                         "(e.g. energy-dissipation); default is all.\n";
            return 0;
        } else {
            only.emplace_back(argv[i]);
        }
    }

    const std::vector<cylas::CriterionResult> results =
        cylas::run_acceptance(cfg, only, std::cout);
    if (results.empty()) {
        std::cerr << "no criteria matched the given selectors\n";
        return 2;
    }
    for (const cylas::CriterionResult& r : results)
        if (!r.pass) return 1;
    return 0;
}
