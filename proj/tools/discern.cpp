#include "discern/cli.hpp"

int main(int argc, char** argv) { return discern::cli::main(argc, argv); }
