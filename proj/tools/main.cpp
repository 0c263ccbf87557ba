#include "rednet/cli.hpp"

int main(int argc, char** argv) { return rednet::cli_main(argc, argv); }
