#include "sjscc/cli.hpp"

int main(int argc, char** argv) { return sjscc::cli::run(argc, argv); }
