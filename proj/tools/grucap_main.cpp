#include "grucap/pipeline.hpp"

int main(int argc, char** argv) { return grucap::run_cli(argc, argv); }
