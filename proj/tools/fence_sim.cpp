#include <iostream>

#include "fence/commands.hpp"

int
main( int argc, char** argv )
{
  return fence::fence_sim_main( argc, argv, std::cout, std::cerr );
}
