#include "dail/cli.hpp"

int main(int argc, char** argv) {
    return dail::cli::run(argc, argv);
}
