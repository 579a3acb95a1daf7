#include "adamoge/commands.hpp"

int main(int argc, char** argv) { return adamoge::cli::run_cli(argc, argv); }
