#include "gapkit/cli.hpp"
#include "gapkit/threads.hpp"

int main(int argc, char** argv) {
  gapkit::configure_threads();
  return gapkit::cli::run_cli(argc, argv);
}
