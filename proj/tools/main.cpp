#include <iostream>

#include "intent_graph/cli.hpp"

int main(int argc, char** argv) {
    return intent_graph::run_cli(argc, argv, std::cout, std::cerr);
}
