#include "rmfs/harness.hpp"

int main(int argc, char** argv) { return rmfs::harness::cli_main(argc, argv); }
