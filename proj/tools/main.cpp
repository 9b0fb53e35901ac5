#include "solitonlab/cli.hpp"

int main(int argc, char** argv)
{
  return solitonlab::cli::run(argc, argv);
}
