#pragma once

#include <doctest.h>

#include <optional>

#include "acn/core/error.h"
#include "acn/core/io.h"
#include "acn/core/text.h"
#include "harness.h"

namespace test_support {

/// The error code thrown by `f`, or nullopt when it returns normally.
template <typename F>
std::optional<acn::ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const acn::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace test_support

#define CHECK_ERROR(expr, expected_code) \
  CHECK(test_support::error_of([&] { (void)(expr); }) == std::optional<acn::ErrorCode>(expected_code))
