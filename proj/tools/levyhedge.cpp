#include <iostream>
#include <string>
#include <vector>

#include "levyhedge/cli.hpp"

int main(int argc, char** argv) {
    return levyhedge::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
