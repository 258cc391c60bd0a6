#include "pglim/cli.hpp"

int main(int argc, char** argv) { return pglim::run_cli(argc, argv); }
