#include "allee/cli.hpp"

int main(int argc, char** argv) { return allee::cli::main(argc, argv); }
