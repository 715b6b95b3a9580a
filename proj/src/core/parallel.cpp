#include "duality/core/parallel.hpp"

#include <cstdlib>
#include <string>

namespace duality::core {

int default_workers() {
  if (const char* env = std::getenv("DUALITY_LAB_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace duality::core
