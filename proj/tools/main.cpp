#include "taskroute/cli.hpp"

int main(int argc, char** argv) { return taskroute::cli_main(argc, argv); }
