#include "stno/cli.hpp"

int main(int argc, char** argv) { return stno::cli_main(argc, argv); }
