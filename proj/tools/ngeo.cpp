#include <iostream>

#include "ngeo/cli.hpp"

int main(int argc, char** argv) { return ngeo::dispatch(argc, argv, std::cout, std::cerr); }
