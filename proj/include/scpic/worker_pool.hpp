#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace scpic {

/// Fixed set of worker threads that execute one task at a time, fork-join style.
/// The calling thread takes part as worker 0.
class WorkerPool {
 public:
  explicit WorkerPool(unsigned threads = 1) : size_(threads == 0 ? 1 : threads) {
    for (unsigned t = 1; t < size_; ++t) threads_.emplace_back([this, t] { loop(t); });
  }

  ~WorkerPool() {
    {
      std::lock_guard lock(mutex_);
      stop_ = true;
      ++generation_;
    }
    wake_.notify_all();
    for (auto& th : threads_) th.join();
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  unsigned size() const { return size_; }

  /// Runs task(worker) on every worker and waits. The first exception thrown by
  /// any worker is rethrown here.
  void run(const std::function<void(unsigned)>& task) {
    if (size_ == 1) {
      task(0);
      return;
    }
    {
      std::lock_guard lock(mutex_);
      task_ = &task;
      pending_ = size_ - 1;
      error_ = nullptr;
      ++generation_;
    }
    wake_.notify_all();
    execute(task, 0);
    std::unique_lock lock(mutex_);
    done_.wait(lock, [this] { return pending_ == 0; });
    task_ = nullptr;
    if (error_) std::rethrow_exception(std::exchange(error_, nullptr));
  }

  /// Dynamic loop over [0, n): body(item, worker).
  template <class Body>
  void parallel_for(std::size_t n, Body&& body) {
    if (n == 0) return;
    if (size_ == 1 || n == 1) {
      for (std::size_t i = 0; i < n; ++i) body(i, 0u);
      return;
    }
    std::atomic<std::size_t> next{0};
    run([&](unsigned worker) {
      for (std::size_t i = next.fetch_add(1, std::memory_order_relaxed); i < n;
           i = next.fetch_add(1, std::memory_order_relaxed))
        body(i, worker);
    });
  }

 private:
  void execute(const std::function<void(unsigned)>& task, unsigned worker) {
    try {
      task(worker);
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }

  void loop(unsigned worker) {
    std::size_t seen = 0;
    for (;;) {
      const std::function<void(unsigned)>* task = nullptr;
      {
        std::unique_lock lock(mutex_);
        wake_.wait(lock, [&] { return generation_ != seen; });
        seen = generation_;
        if (stop_) return;
        task = task_;
      }
      execute(*task, worker);
      {
        std::lock_guard lock(mutex_);
        if (--pending_ == 0) done_.notify_one();
      }
    }
  }

  unsigned size_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(unsigned)>* task_ = nullptr;
  std::size_t generation_ = 0;
  unsigned pending_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

}  // namespace scpic
