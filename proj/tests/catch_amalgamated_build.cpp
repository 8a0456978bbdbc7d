// Single compilation of the amalgamated Catch2 implementation (provides
// the default main for every test binary that links catch2_runner).
#include <catch2/catch_amalgamated.cpp>
