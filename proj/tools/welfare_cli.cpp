#include "welfare/cli.hpp"

int main(int argc, char** argv) { return welfare::run_cli(argc, argv); }
