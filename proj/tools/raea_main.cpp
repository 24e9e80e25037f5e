// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "raea/cli/app.hpp"

int main(int argc, char** argv) { return raea::cli::run_cli(argc, argv, std::cout, std::cerr); }
