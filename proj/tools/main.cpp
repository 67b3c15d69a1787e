#include "commands.hpp"

int main(int argc, char** argv)
{
    return tdcox::cli::run(argc, argv);
}
