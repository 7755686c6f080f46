#include "romes/experiment.hpp"

int main(int argc, char** argv) { return romes::cli_main(argc, argv); }
