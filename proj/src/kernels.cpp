#include "wwe/kernels.hpp"

#include <atomic>

namespace wwe {

namespace {
std::atomic<int> g_threads{1};
}

void set_threads(int n) { g_threads.store(n < 1 ? 1 : n); }
int threads() { return g_threads.load(); }

}  // namespace wwe
