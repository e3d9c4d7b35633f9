#include "seadet/cli.hpp"

int main(int argc, char** argv) { return seadet::run_cli(argc, argv); }
