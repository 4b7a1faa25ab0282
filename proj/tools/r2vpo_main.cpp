#include "r2vpo/cli.hpp"

int main(int argc, char** argv) { return r2vpo::parse_and_run(argc, argv); }
