#include "bogo/cli.hpp"

int main(int argc, char** argv) { return bogo::cli::main(argc, argv); }
