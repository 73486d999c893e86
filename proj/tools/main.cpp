#include "commands.hpp"

int main(int argc, char** argv) { return hacklab::app::run_cli(argc, argv); }
