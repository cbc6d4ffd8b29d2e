#include "cli.hpp"

int main(int argc, char** argv) { return foothold::cli::run(argc, argv); }
