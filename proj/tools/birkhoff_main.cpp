#include "birkhoff/cli.hpp"

int main(int argc, char** argv) {
    return birkhoff::cli::run(argc, argv);
}
