#pragma once

#include <functional>
#include <memory>

namespace otlpf {

// Fixed-size worker pool with a blocking parallel_for. Loop bodies must write
// only to disjoint slots indexed by the loop variable; under that contract the
// result is identical for any worker count, which the filters rely on for
// thread-count-invariant output.
class ThreadPool {
 public:
  explicit ThreadPool(int num_threads);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int size() const;

  // Runs fn(i) for i in [begin, end). Blocks until all iterations finish.
  // The calling thread participates. Exceptions from fn are rethrown (first
  // one wins).
  void parallel_for(int begin, int end, const std::function<void(int)>& fn);

  // Process-wide pool. Defaults to hardware concurrency; resizable before
  // first heavy use via set_global_threads.
  static ThreadPool& global();
  static void set_global_threads(int num_threads);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace otlpf
