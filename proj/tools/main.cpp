#include "quadmimic/cli.hpp"

int main(int argc, char** argv) { return quadmimic::run_cli(argc, argv); }
