#include "flatlim/expcli.hpp"

int main(int argc, char** argv) { return flatlim::run_cli(argc, argv); }
