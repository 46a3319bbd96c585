#include "rbi/cli/commands.hpp"

int main(int argc, char** argv) { return rbi::cli::run(argc, argv); }
