#include "psrl/cli.hpp"

int main(int argc, char** argv) { return psrl::cli_main(argc, argv); }
