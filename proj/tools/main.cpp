#include "fblearn/harness.hpp"

int main(int argc, char** argv) { return fblearn::run_cli(argc, argv); }
