#include "cli.hpp"

int main(int argc, char** argv) { return whitekit::cli::run(argc, argv); }
