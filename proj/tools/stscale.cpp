#include "stscale/cli.hpp"

int main(int argc, char** argv) { return stscale::cli::run(argc, argv); }
