#include "spinxfer/cli.hpp"

int main(int argc, char** argv) { return spinxfer::cli::run(argc, argv); }
