#include "otlpf/thread_pool.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace otlpf {

namespace {
// Guards against nested parallel_for: inner calls run inline on the caller.
thread_local bool inside_pool_task = false;
}  // namespace

struct ThreadPool::Impl {
  struct Job {
    int end = 0;
    std::atomic<int> next{0};
    std::atomic<int> remaining{0};
    const std::function<void(int)>* fn = nullptr;
    std::exception_ptr error;
    std::mutex error_mutex;
  };

  explicit Impl(int num_threads) {
    if (num_threads < 1) num_threads = 1;
    total_threads = num_threads;
    for (int i = 0; i + 1 < num_threads; ++i) {
      workers.emplace_back([this] { worker_loop(); });
    }
  }

  ~Impl() {
    {
      std::lock_guard<std::mutex> lock(mutex);
      stopping = true;
    }
    cv.notify_all();
    for (auto& t : workers) t.join();
  }

  void worker_loop() {
    std::uint64_t seen_epoch = 0;
    std::unique_lock<std::mutex> lock(mutex);
    while (true) {
      cv.wait(lock, [&] { return stopping || (job != nullptr && epoch != seen_epoch); });
      if (stopping) return;
      seen_epoch = epoch;
      // Shared ownership keeps the Job alive even if this worker only gets
      // scheduled after the owner finished and released its reference.
      std::shared_ptr<Job> my_job = job;
      lock.unlock();
      inside_pool_task = true;
      run_job(*my_job);
      inside_pool_task = false;
      lock.lock();
    }
  }

  static void run_job(Job& j) {
    while (true) {
      const int i = j.next.fetch_add(1, std::memory_order_relaxed);
      if (i >= j.end) break;
      try {
        (*j.fn)(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(j.error_mutex);
        if (!j.error) j.error = std::current_exception();
      }
      j.remaining.fetch_sub(1, std::memory_order_acq_rel);
    }
  }

  void parallel_for(int begin, int end, const std::function<void(int)>& fn) {
    if (begin >= end) return;
    const int count = end - begin;
    if (count == 1 || total_threads == 1 || inside_pool_task) {
      for (int i = begin; i < end; ++i) fn(i);
      return;
    }
    std::function<void(int)> shifted = [&fn, begin](int i) { fn(begin + i); };
    auto j = std::make_shared<Job>();
    j->end = count;
    j->remaining.store(count);
    j->fn = &shifted;
    {
      std::lock_guard<std::mutex> lock(mutex);
      job = j;
      ++epoch;
    }
    cv.notify_all();
    inside_pool_task = true;
    run_job(*j);
    inside_pool_task = false;
    // All iterations are claimed once next >= end. Iterations that were
    // claimed may still be running; `remaining` hits zero only after every
    // executed body returned, which bounds the lifetime of `shifted`. Late
    // workers holding the Job see next >= end and exit without touching fn.
    while (j->remaining.load(std::memory_order_acquire) > 0) {
      std::this_thread::yield();
    }
    {
      std::lock_guard<std::mutex> lock(mutex);
      if (job == j) job = nullptr;
    }
    if (j->error) std::rethrow_exception(j->error);
  }

  std::vector<std::thread> workers;
  std::mutex mutex;
  std::condition_variable cv;
  std::shared_ptr<Job> job;
  std::uint64_t epoch = 0;
  bool stopping = false;
  int total_threads = 1;
};

ThreadPool::ThreadPool(int num_threads) : impl_(new Impl(num_threads)) {}
ThreadPool::~ThreadPool() = default;

int ThreadPool::size() const { return impl_->total_threads; }

void ThreadPool::parallel_for(int begin, int end,
                              const std::function<void(int)>& fn) {
  impl_->parallel_for(begin, end, fn);
}

namespace {
std::unique_ptr<ThreadPool>& global_pool_slot() {
  static std::unique_ptr<ThreadPool> pool;
  return pool;
}
std::mutex global_pool_mutex;
}  // namespace

ThreadPool& ThreadPool::global() {
  std::lock_guard<std::mutex> lock(global_pool_mutex);
  auto& slot = global_pool_slot();
  if (!slot) {
    const unsigned hw = std::thread::hardware_concurrency();
    slot = std::make_unique<ThreadPool>(hw == 0 ? 1 : static_cast<int>(hw));
  }
  return *slot;
}

void ThreadPool::set_global_threads(int num_threads) {
  std::lock_guard<std::mutex> lock(global_pool_mutex);
  global_pool_slot() = std::make_unique<ThreadPool>(num_threads);
}

}  // namespace otlpf
