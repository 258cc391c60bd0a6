#pragma once

#include <string>
#include <vector>

#include "pglim/sim_estimators.hpp"

namespace pglim {

// Command-line front end. Exit codes: 0 success (vacuous certificates
// included), 2 validation, 3 mathematical precondition, 4 I/O.
int run_cli(int argc, char** argv);

// "1,0.5,0.1" or "logspace:<start>,<stop>,<count>".
std::vector<double> parse_grid(const std::string& text);

std::string figure1_csv(const std::vector<Figure1Row>& rows);
std::string figure1_svg(const std::vector<Figure1Row>& rows);

}  // namespace pglim
