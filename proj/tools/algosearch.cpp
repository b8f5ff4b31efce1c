#include "algosearch/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return algosearch::cli::run_cli(argc, argv, std::cout, std::cerr);
}
