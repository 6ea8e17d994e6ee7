#include <string>
#include <vector>

#include "rebrowse/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return rebrowse::cli::run(std::move(args));
}
