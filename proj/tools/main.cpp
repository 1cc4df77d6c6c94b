#include "cqte/cli.hpp"

int main(int argc, char** argv) { return cqte::cli_run(argc, argv); }
