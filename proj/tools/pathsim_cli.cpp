#include "pathsim/cli.hpp"

int main(int argc, char** argv) { return pathsim::run_cli(argc, argv); }
