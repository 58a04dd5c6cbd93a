#include <catch2/catch_amalgamated.hpp>
#include "mnav/harness.hpp"
