#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace drf {

// Process-wide worker count. 0 means "one thread per hardware core".
inline int& thread_count() {
  static int n = 1;
  return n;
}

namespace detail {

// Persistent worker pool. Workers park on a condition variable between
// parallel_for calls; the range split is static, so worker w always sees the
// same index range for a given (count, worker-count) pair.
class WorkerPool {
 public:
  ~WorkerPool() { shutdown(); }

  void resize(std::size_t workers) {
    if (workers == threads_.size() + 1) return;  // caller thread counts as 0
    shutdown();
    if (workers <= 1) return;
    stop_ = false;
    threads_.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
      threads_.emplace_back([this, w] { worker_loop(static_cast<int>(w)); });
    }
  }

  std::size_t workers() const { return threads_.size() + 1; }

  // fn(lo, hi, worker) over a static partition of [0, count).
  void run(std::size_t count,
           const std::function<void(std::size_t, std::size_t, int)>& fn) {
    const std::size_t nw = std::min(workers(), count);
    if (nw <= 1) {
      fn(0, count, 0);
      return;
    }
    {
      std::lock_guard<std::mutex> lock(mu_);
      fn_ = &fn;
      count_ = count;
      active_ = nw;
      ++epoch_;
    }
    cv_.notify_all();
    // The calling thread takes slice 0.
    fn(0, count / nw, 0);
    std::unique_lock<std::mutex> lock(mu_);
    done_cv_.wait(lock, [this] { return active_ == 1; });
    active_ = 0;
    fn_ = nullptr;
  }

 private:
  void worker_loop(int id) {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(std::size_t, std::size_t, int)>* fn = nullptr;
      std::size_t count = 0, nw = 0;
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return stop_ || epoch_ != seen; });
        if (stop_) return;
        seen = epoch_;
        fn = fn_;
        count = count_;
        nw = std::min(workers(), count);
      }
      if (fn && static_cast<std::size_t>(id) < nw) {
        const std::size_t lo = count * id / nw;
        const std::size_t hi = count * (id + 1) / nw;
        (*fn)(lo, hi, id);
        std::lock_guard<std::mutex> lock(mu_);
        if (--active_ == 1) done_cv_.notify_one();
      }
    }
  }

  void shutdown() {
    if (threads_.empty()) return;
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
    threads_.clear();
  }

  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  const std::function<void(std::size_t, std::size_t, int)>* fn_ = nullptr;
  std::size_t count_ = 0;
  std::size_t active_ = 0;
  std::uint64_t epoch_ = 0;
  bool stop_ = false;
};

inline WorkerPool& pool() {
  static WorkerPool p;
  return p;
}

}  // namespace detail

inline void set_thread_count(int n) {
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  thread_count() = n;
  detail::pool().resize(static_cast<std::size_t>(n));
}

// Static block partition of [0, count) across the configured workers.
// Deterministic assignment: worker w always gets the same index range, so
// per-worker partial results can be reduced in a fixed order.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  if (thread_count() <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i, 0);
    return;
  }
  const std::function<void(std::size_t, std::size_t, int)> body =
      [&fn](std::size_t lo, std::size_t hi, int worker) {
        for (std::size_t i = lo; i < hi; ++i) fn(i, worker);
      };
  detail::pool().run(count, body);
}

}  // namespace drf
