#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <string>

namespace ccncheck::testing {

/// A fresh directory under the system temp dir named after the running test.
inline std::filesystem::path scratch_dir(const std::string& suffix = {}) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = std::filesystem::temp_directory_path() / "ccncheck-tests" /
             (std::string(info->test_suite_name()) + "." + info->name() + suffix);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace ccncheck::testing
