#include <vector>

#include "conreader/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return conreader::cli::run(std::move(args));
}
