#include <iostream>
#include <string>
#include <vector>

#include "grraf/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return grraf::cli::run(args, std::cout, std::cerr);
}
