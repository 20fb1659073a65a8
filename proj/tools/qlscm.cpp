#include "qlscm/cli.hpp"

int main(int argc, char** argv) { return qlscm::run_cli(argc, argv); }
