#include "sahiqc/cli.hpp"

int main(int argc, char** argv) {
  return sahiqc::cli::run(argc, argv);
}
