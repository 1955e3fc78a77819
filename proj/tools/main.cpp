#include "flanp/cli.hpp"

int main(int argc, char** argv) { return flanp::run_cli(argc, argv); }
