#include "deephedge/cli.hpp"

int main(int argc, char** argv) { return deephedge::cli::cli_main(argc, argv); }
