#include "slsim/cli.hpp"

int main(int argc, char** argv) { return slsim::cli_main(argc, argv); }
