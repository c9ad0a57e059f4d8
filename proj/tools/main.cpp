#include <iostream>

#include "batchsched/cli.hpp"

int main(int argc, char** argv) {
    return batchsched::parse_and_dispatch(argc, argv, std::cout, std::cerr);
}
