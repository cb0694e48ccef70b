#include "tmam/cli.hpp"

int main (int argc, char **argv) { return tmam::run_cli (argc, argv); }
