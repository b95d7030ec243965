#include "focklaser/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return focklaser::cli::run(argc, argv, std::cout, std::cerr);
}
