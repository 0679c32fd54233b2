#include <iostream>

#include "partstat_cli/commands.hpp"

int main(int argc, char** argv) { return partstat::cli::run(argc, argv, std::cout, std::cerr); }
