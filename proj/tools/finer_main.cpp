#include "finer/run.hpp"

int main(int argc, char** argv) { return finer::run_main(argc, argv); }
