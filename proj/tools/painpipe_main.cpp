#include "painpipe/cli.hpp"

int main(int argc, char** argv) { return painpipe::cli::cli_main(argc, argv); }
