#include "nvecho/cli.hpp"

int main(int argc, char** argv) { return nvecho::cli_dispatch(argc, argv); }
