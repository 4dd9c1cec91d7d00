#include "h2st/cli.hpp"

int main(int argc, char** argv) { return h2st::cli::main(argc, argv); }
