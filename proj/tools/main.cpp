#include "wgl/cli.hpp"

int main(int argc, char** argv) { return wgl::cli::main(argc, argv); }
