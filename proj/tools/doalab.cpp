#include "doalab/cli.hpp"

int main(int argc, char** argv) {
    return doalab::cli::run({argv + 1, argv + argc});
}
