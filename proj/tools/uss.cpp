#include "uss/cli.hpp"

int main(int argc, char** argv) {
    return uss::cli::run(argc, argv);
}
