#include "roughctrl/cli.hpp"

int main(int argc, char** argv) { return roughctrl::run_cli(argc, argv); }
