#include "splinegeo/cli.hpp"

int main(int argc, char** argv) { return splinegeo::run_command(argc, argv); }
