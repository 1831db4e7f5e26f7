#include "lipkit/cli.hpp"

int main(int argc, char** argv) { return lipkit::cli::run(argc, argv); }
