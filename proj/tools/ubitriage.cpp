#include "ubitriage/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return ubitriage::cli::run_cli(argc, argv, std::cout, std::cerr);
}
