#include <string>
#include <vector>

#include "csiloc/cli/app.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return csiloc::cli::run(args);
}
