#include "cusped/cli.hpp"

int main(int argc, char** argv) { return cusped::cli::main(argc, argv); }
