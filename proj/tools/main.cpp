#include "ldmcvar/cli.hpp"

int main(int argc, char** argv) { return ldmcvar::cli_main(argc, argv); }
