#include "metriplex/cli.hpp"

int main(int argc, char** argv) { return metriplex::cli::run(argc, argv); }
