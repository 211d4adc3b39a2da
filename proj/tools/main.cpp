#include "commands.hpp"

int main(int argc, char** argv)
{
    return flowerpose::cli::run(argc, argv);
}
