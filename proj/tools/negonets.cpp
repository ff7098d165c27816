#include <vector>

#include "nego/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return nego::cli::run(args);
}
