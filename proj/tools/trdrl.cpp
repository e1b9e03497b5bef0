#include "trdrl/cli.hpp"

int main(int argc, char** argv) { return trdrl::run_cli(argc, argv); }
