#include <string>
#include <vector>

#include "paintdomain/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return paintdomain::dispatch(args);
}
