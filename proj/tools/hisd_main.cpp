#include "hisd/cli.hpp"

int main(int argc, char **argv) { return hisd::cli::main(argc, argv); }
