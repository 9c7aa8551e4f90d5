#include "vecot/cli/commands.hpp"

int main(int argc, char** argv) { return vecot::cli::run_main(argc, argv); }
