#include "lmf/cli.hpp"

int main(int argc, char** argv) { return lmf::cli::main(argc, argv); }
