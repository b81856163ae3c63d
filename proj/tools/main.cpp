#include "cli.hpp"

int main(int argc, char **argv) { return styleforge::cli::run(argc, argv); }
