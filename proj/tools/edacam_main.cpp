#include "edacam/cli.hpp"

int main(int argc, char** argv) { return edacam::cli_main(argc, argv); }
