#include <iostream>

#include "revassist/cli.hpp"

int main(int argc, char** argv) {
    return revassist::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
