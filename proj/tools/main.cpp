#include <iostream>

#include "bstd/cli.hpp"

int main(int argc, char** argv)
{
    return bstd::cli::run(argc, argv, std::cout, std::cerr);
}
