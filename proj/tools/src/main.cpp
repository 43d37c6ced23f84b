#include <iostream>

#include "lswitch/cli.hpp"

int main(int argc, char** argv) {
    return lswitch::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
