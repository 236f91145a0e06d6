#include "alcgan/cli/cli.hpp"
#include "alcgan/nn/runtime.hpp"

int main(int argc, char** argv) {
    alcgan::nn::configure_allocator();
    return alcgan::cli::run_cli(argc, argv);
}
