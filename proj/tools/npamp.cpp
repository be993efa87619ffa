#include "npamp/cli.hpp"

int main(int argc, char** argv) { return npamp::run_cli(argc, argv); }
