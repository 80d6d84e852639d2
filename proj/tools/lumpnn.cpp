#include "lumpnn/cli.hpp"

int main(int argc, char** argv) { return lumpnn::cli::run(argc, argv); }
