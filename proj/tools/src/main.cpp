#include "cli.hpp"

int main(int argc, char** argv) { return blockpred::cli::run_cli(argc, argv); }
