#pragma once

// Deterministic worker pool. Jobs are index ranges; workers claim indices
// from a shared counter and write results into caller-owned slots, so the
// outcome is identical for any thread count (scheduling only changes who
// computes which index, never the value stored at it).

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ges {

class WorkerPool {
 public:
  explicit WorkerPool(int threads) : thread_count_(threads < 1 ? 1 : threads) {
    for (int i = 0; i + 1 < thread_count_; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
    }
    job_cv_.notify_all();
    for (auto& worker : workers_) worker.join();
  }

  int thread_count() const { return thread_count_; }

  // Runs fn(0) .. fn(count-1), each exactly once. Rethrows the first worker
  // exception on the calling thread after all indices finish or are claimed.
  void for_index(std::size_t count, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    if (workers_.empty() || count == 1) {
      for (std::size_t i = 0; i < count; ++i) fn(i);
      return;
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      job_fn_ = &fn;
      job_count_ = count;
      next_index_.store(0, std::memory_order_relaxed);
      completed_.store(0, std::memory_order_relaxed);
      ++generation_;
    }
    job_cv_.notify_all();
    run_share(fn, count);
    {
      std::unique_lock<std::mutex> lock(mutex_);
      done_cv_.wait(lock, [&] { return completed_.load() == job_count_; });
      job_fn_ = nullptr;
      if (first_error_) {
        std::exception_ptr err = first_error_;
        first_error_ = nullptr;
        std::rethrow_exception(err);
      }
    }
  }

 private:
  void run_share(const std::function<void(std::size_t)>& fn,
                 std::size_t count) {
    for (;;) {
      const std::size_t i = next_index_.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) break;
      run_one(fn, i, count);
    }
  }

  void run_one(const std::function<void(std::size_t)>& fn, std::size_t i,
               std::size_t count) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mutex_);
      if (!first_error_) first_error_ = std::current_exception();
    }
    if (completed_.fetch_add(1, std::memory_order_acq_rel) + 1 == count) {
      std::lock_guard<std::mutex> lock(mutex_);
      done_cv_.notify_all();
    }
  }

  void worker_loop() {
    std::uint64_t seen_generation = 0;
    for (;;) {
      const std::function<void(std::size_t)>* fn = nullptr;
      std::size_t count = 0;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        job_cv_.wait(lock, [&] {
          return stop_ || generation_ != seen_generation;
        });
        if (stop_) return;
        seen_generation = generation_;
        fn = job_fn_;
        count = job_count_;
      }
      if (fn == nullptr) continue;
      for (;;) {
        const std::size_t i =
            next_index_.fetch_add(1, std::memory_order_relaxed);
        if (i >= count) break;
        run_one(*fn, i, count);
      }
    }
  }

  const int thread_count_;
  std::vector<std::thread> workers_;

  std::mutex mutex_;
  std::condition_variable job_cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t)>* job_fn_ = nullptr;
  std::size_t job_count_ = 0;
  std::uint64_t generation_ = 0;
  std::atomic<std::size_t> next_index_{0};
  std::atomic<std::size_t> completed_{0};
  std::exception_ptr first_error_;
  bool stop_ = false;
};

}  // namespace ges
