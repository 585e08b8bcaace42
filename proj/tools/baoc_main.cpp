#include <iostream>

#include "baoc/cli.hpp"

int main(int argc, char** argv) { return baoc::dispatch(argc, argv, std::cout, std::cerr); }
