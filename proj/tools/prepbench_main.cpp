#include "prepbench/bench.hpp"

int main(int argc, char** argv) { return prepbench::bench::cli(argc, argv); }
