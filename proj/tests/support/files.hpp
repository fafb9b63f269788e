#pragma once

#include <fstream>
#include <sstream>
#include <string>

namespace euc::testing {

inline std::string fixture_path(const std::string& relative) { return std::string(EUC_FIXTURE_DIR) + "/" + relative; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace euc::testing
