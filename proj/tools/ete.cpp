#include <string>
#include <vector>

#include "ete/cli.hpp"

int main(int argc, char** argv) { return ete::cli::run(std::vector<std::string>(argv + 1, argv + argc)); }
