#include "tolopt/cli.hpp"

int main(int argc, char** argv) { return tolopt::cli_main(argc, argv); }
