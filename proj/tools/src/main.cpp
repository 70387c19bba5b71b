#include <iostream>

#include "cosod/cli.hpp"

int main(int argc, char** argv) {
    return cosod::cli::run(argc, argv, std::cout, std::cerr);
}
