#include <iostream>
#include <string>
#include <vector>

#include "exas/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return exas::cli::run(args, std::cout, std::cerr);
}
