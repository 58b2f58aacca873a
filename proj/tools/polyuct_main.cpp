#include "polyuct/cli.hpp"

int main(int argc, char** argv) { return polyuct::run_cli(argc, argv); }
