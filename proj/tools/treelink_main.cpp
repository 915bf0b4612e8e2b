#include "treelink/cli.hpp"

int main(int argc, char** argv) { return treelink::run_cli(argc, argv); }
