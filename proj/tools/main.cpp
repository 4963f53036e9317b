#include "logitconf/cli.hpp"

int main(int argc, char** argv) { return logitconf::cli::run(argc, argv); }
