#include "trits/cli.hpp"

int main(int argc, char** argv) { return trits::run_cli(argc, argv); }
