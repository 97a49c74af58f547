#include "cli.hpp"

int main(int argc, char** argv) { return rankinfer::run_cli(argc, argv); }
