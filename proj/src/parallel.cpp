#include "busdep/parallel.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>
#include <vector>

namespace busdep {

namespace {

thread_local bool g_in_worker = false;

class ThreadPool {
 public:
  static ThreadPool& instance() {
    static ThreadPool pool;
    return pool;
  }

  void run(std::size_t n, int threads,
           const std::function<void(std::size_t, std::size_t)>& fn) {
    std::scoped_lock run_lock(run_mu_);
    const std::size_t blocks =
        std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    const std::size_t chunk = (n + blocks - 1) / blocks;

    {
      std::scoped_lock lock(mu_);
      for (std::size_t b = 1; b < blocks; ++b) {
        const std::size_t begin = b * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) continue;
        tasks_.push_back({&fn, begin, end});
        ++pending_;
      }
    }
    cv_.notify_all();

    // caller works on the first block while the pool drains the rest
    fn(0, std::min(n, chunk));

    std::unique_lock lock(mu_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
  }

 private:
  ThreadPool() {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    for (unsigned i = 1; i < hw; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  ~ThreadPool() {
    {
      std::scoped_lock lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  struct Task {
    const std::function<void(std::size_t, std::size_t)>* fn;
    std::size_t begin;
    std::size_t end;
  };

  void worker_loop() {
    g_in_worker = true;
    for (;;) {
      Task task;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [this] { return stop_ || !tasks_.empty(); });
        if (stop_ && tasks_.empty()) return;
        task = tasks_.front();
        tasks_.pop_front();
      }
      (*task.fn)(task.begin, task.end);
      {
        std::scoped_lock lock(mu_);
        if (--pending_ == 0) done_cv_.notify_all();
      }
    }
  }

  std::mutex run_mu_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  std::deque<Task> tasks_;
  std::vector<std::thread> workers_;
  std::size_t pending_ = 0;
  bool stop_ = false;
};

}  // namespace

int default_threads() {
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  if (threads <= 1 || n == 1 || g_in_worker) {
    fn(0, n);
    return;
  }
  ThreadPool::instance().run(n, threads, fn);
}

}  // namespace busdep
