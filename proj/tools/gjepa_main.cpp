#include "gjepa/cli.hpp"

int main(int argc, char** argv) { return gjepa::run_cli(argc, argv); }
