#include "sedlab/cli_runner.hpp"

int main(int argc, char** argv) { return sedlab::run_cli(argc, argv); }
