#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace compadapt {

// Runs the command-line tool. Exit status: 0 success / all pass,
// 1 counterexample found, 2 inconclusive (bound hit), 3 usage or parse
// error.
int run_cli(std::vector<std::string> args, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace compadapt
