#include "mplasso/cli.hpp"

int main(int argc, char** argv) { return mplasso::run_cli(argc, argv); }
