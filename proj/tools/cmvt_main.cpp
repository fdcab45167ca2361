#include "cmvt/cli.hpp"

int main(int argc, char** argv) { return cmvt::cli::run(argc, argv); }
