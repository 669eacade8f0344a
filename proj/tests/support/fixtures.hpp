#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tollopt/config.hpp"
#include "tollopt/network.hpp"
#include "tollopt/route_choice.hpp"
#include "tollopt/supply.hpp"

namespace tollopt::testing {

inline std::filesystem::path source_dir() { return TOLLOPT_SOURCE_DIR; }
inline std::filesystem::path toy_config_path() { return source_dir() / "scenarios/toy/config.ini"; }

inline Link make_link(LinkId id, NodeId from, NodeId to, double fftime, double capacity = 3600.0,
                      std::int64_t storage = 1000, double length = 1000.0) {
  return Link{id, from, to, length, fftime, capacity, storage};
}

/// 1 -> 2 over a single link.
inline Network single_link(double fftime = 60.0, double capacity = 3600.0, std::int64_t storage = 1000) {
  return Network({1, 2}, {make_link(1, 1, 2, fftime, capacity, storage)}, {});
}

/// 1 -> 2 -> 4 and 1 -> 3 -> 4; link 1 carries the gantry.
inline Network diamond(std::vector<LinkId> gantries = {1}) {
  return Network({1, 2, 3, 4},
                 {make_link(1, 1, 2, 100.0), make_link(2, 2, 4, 100.0), make_link(3, 1, 3, 120.0),
                  make_link(4, 3, 4, 120.0)},
                 std::move(gantries));
}

/// Congested two-route corridor with a tolled bottleneck route.
inline Network two_route() {
  return Network({1, 2, 3, 4},
                 {make_link(1, 1, 2, 60.0, 900.0, 400), make_link(2, 2, 4, 60.0, 3600.0, 400),
                  make_link(3, 1, 3, 150.0, 3600.0, 400), make_link(4, 3, 4, 150.0, 3600.0, 400)},
                 {1});
}

/// Temporary directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + "_" +
             std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::filesystem::path path_;
};

}  // namespace tollopt::testing
