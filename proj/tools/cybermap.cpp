#include "cybermap/cli.hpp"

int main(int argc, char** argv) {
  return cybermap::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
