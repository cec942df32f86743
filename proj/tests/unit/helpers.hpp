#pragma once

#include "mardid/error.hpp"

#include <catch_amalgamated.hpp>

#include <string>

// Passes when `expr` throws mardid::Error of the given kind.
#define REQUIRE_THROWS_KIND(expr, expected_kind)                                     \
  do {                                                                              \
    bool thrown_ = false;                                                           \
    try {                                                                           \
      (void)(expr);                                                                 \
    } catch (const mardid::Error& e_) {                                             \
      thrown_ = true;                                                               \
      INFO(e_.what());                                                              \
      REQUIRE(e_.kind() == (expected_kind));                                        \
    }                                                                               \
    REQUIRE(thrown_);                                                               \
  } while (false)
