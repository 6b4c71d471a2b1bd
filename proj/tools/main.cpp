#include "mfp/commands.hpp"

int main(int argc, char** argv) { return mfp::run_cli(argc, argv); }
