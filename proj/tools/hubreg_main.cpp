#include "hubreg/cli.hpp"

int main(int argc, char** argv) { return hubreg::run_cli(argc, argv); }
