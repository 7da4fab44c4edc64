#include "nc/cli.hpp"

int main(int argc, char** argv) { return nc::run_cli(argc, argv); }
