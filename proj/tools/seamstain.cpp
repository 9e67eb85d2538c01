#include "seamstain/cli.hpp"

int main(int argc, char** argv) { return seamstain::run_cli(argc, argv); }
