#include "vsrsfol/cli.hpp"

int main(int argc, char** argv) { return vsrsfol::run_cli(argc, argv); }
