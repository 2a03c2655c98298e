#include <catch2/catch_amalgamated.hpp>
#include "instaug/instaug.hpp"

TEST_CASE("placeholder remote", "[remote]") { CHECK(true); }
