#include <iostream>

#include "sheafsep/cli.hpp"

int main(int argc, char** argv) { return sheafsep::run_cli(argc, argv, std::cout, std::cerr); }
