#include <iostream>

#include "gaze360/cli.hpp"

int main(int argc, char** argv) { return gaze360::run_cli(argc, argv, std::cout, std::cerr); }
