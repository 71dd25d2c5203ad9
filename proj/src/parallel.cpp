#include "kdeint/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>
#include <tbb/blocked_range.h>
#include <tbb/global_control.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>
#include <thread>

namespace kdeint {

namespace {

std::atomic<std::size_t> override_threads{ 0 };

std::size_t
default_threads()
{
  if (const char* env = std::getenv("KDEINT_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0)
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

} // namespace

std::size_t
thread_count()
{
  const std::size_t t = override_threads.load();
  return t == 0 ? default_threads() : t;
}

void
set_thread_count(std::size_t threads)
{
  override_threads.store(threads);
}

void
parallel_for(std::size_t count, const std::function<void(std::size_t)>& body)
{
  const std::size_t threads = thread_count();
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i)
      body(i);
    return;
  }
  tbb::global_control limit(tbb::global_control::max_allowed_parallelism, threads);
  tbb::task_arena arena(static_cast<int>(threads));
  arena.execute([&] {
    tbb::parallel_for(tbb::blocked_range<std::size_t>(0, count),
                      [&](const tbb::blocked_range<std::size_t>& r) {
                        for (std::size_t i = r.begin(); i != r.end(); ++i)
                          body(i);
                      });
  });
}

} // namespace kdeint
