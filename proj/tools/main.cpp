#include <iostream>

#include "erlangs_cli.hpp"

int main(int argc, char** argv)
{
    return erlangs::cli::run(argc, argv, std::cout, std::cerr);
}
