#include "cli_app.hpp"

int main(int argc, char** argv) { return radarprep::cli::run(argc, argv); }
