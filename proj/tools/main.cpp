#include <iostream>

#include "cellseg/app.hpp"

int main(int argc, char** argv) { return cellseg::run_cli(argc, argv, std::cout, std::cerr); }
