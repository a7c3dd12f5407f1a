#include "cli.hpp"

int main(int argc, char** argv) { return fdcert::cli::run(argc, argv); }
