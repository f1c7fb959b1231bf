#include "altplan_cli.hpp"

int main(int argc, char** argv) {
  return altplan::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
