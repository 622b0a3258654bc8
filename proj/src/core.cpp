#include "lct/core.hpp"

#include <omp.h>

#include <atomic>
#include <cstdio>
#include <iostream>

namespace lct {

namespace {
std::atomic<int> g_threads{0};
std::atomic<bool> g_warn{true};
const int g_default_threads = omp_get_max_threads();
}  // namespace

void set_threads(int n) {
    g_threads = n < 0 ? 0 : n;
    omp_set_num_threads(n > 0 ? n : g_default_threads);
}

int threads() {
    int n = g_threads.load();
    return n > 0 ? n : omp_get_max_threads();
}

void warn(const std::string& msg) {
    if (g_warn) std::cerr << "warning: " << msg << "\n";
}

void set_warnings_enabled(bool on) { g_warn = on; }

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace lct
