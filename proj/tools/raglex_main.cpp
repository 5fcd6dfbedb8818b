#include <string>
#include <vector>

#include "raglex/cli.hpp"

int main(int argc, char** argv) {
    return raglex::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
