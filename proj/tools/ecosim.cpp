#include <ecosim/runner.hpp>

int main(int argc, char** argv)
{
    return ecosim::run_cli(argc, argv);
}
