#include <iostream>

#include "granlower/cli.hpp"

int main(int argc, char** argv)
{
    return granlower::cli::run(argc, argv, std::cout, std::cerr);
}
