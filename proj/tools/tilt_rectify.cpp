#include "tilt/cli.hpp"

int main(int argc, char** argv) { return tilt::run_cli(argc, argv); }
