#include "segwave/cli.hpp"

int main(int argc, char** argv) { return segwave::cli_main(argc, argv); }
