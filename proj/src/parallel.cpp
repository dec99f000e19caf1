#include "sfanc/parallel.hpp"

#include <algorithm>
#include <condition_variable>
#include <mutex>
#include <thread>
#include <vector>

namespace sfanc {
namespace {

int g_thread_count = 0;
thread_local bool t_in_worker = false;

// Coarse-grained pool: every state transition happens under the mutex, only
// task bodies run unlocked. Tasks are whole chunks of work, so the per-task
// locking is negligible.
class Pool {
 public:
  static Pool& instance() {
    static Pool pool;
    return pool;
  }

  ~Pool() { stop_workers(); }

  int size() {
    std::unique_lock<std::mutex> lk(mu_);
    ensure_started(lk);
    return static_cast<int>(workers_.size()) + 1;  // workers + calling thread
  }

  void run(int n_tasks, const std::function<void(int)>& task) {
    std::unique_lock<std::mutex> lk(mu_);
    ensure_started(lk);
    task_ = &task;
    n_tasks_ = n_tasks;
    next_ = 0;
    remaining_ = n_tasks;
    cv_work_.notify_all();

    while (next_ < n_tasks_) {
      const int i = next_++;
      lk.unlock();
      t_in_worker = true;  // tasks run inline if they spawn nested parallel_for
      task(i);
      t_in_worker = false;
      lk.lock();
      if (--remaining_ == 0) cv_done_.notify_all();
    }
    cv_done_.wait(lk, [&] { return remaining_ == 0; });
    task_ = nullptr;
  }

 private:
  void ensure_started(std::unique_lock<std::mutex>& lk) {
    const int want = (g_thread_count > 0)
                         ? g_thread_count
                         : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const int want_workers = want > 1 ? want - 1 : 0;
    if (started_ && static_cast<int>(workers_.size()) == want_workers) return;
    lk.unlock();
    stop_workers();
    lk.lock();
    for (int i = 0; i < want_workers; ++i) workers_.emplace_back([this] { worker_loop(); });
    started_ = true;
  }

  void stop_workers() {
    std::vector<std::thread> doomed;
    {
      std::lock_guard<std::mutex> lk(mu_);
      stopping_ = true;
      cv_work_.notify_all();
      doomed.swap(workers_);
    }
    for (auto& t : doomed) t.join();
    std::lock_guard<std::mutex> lk(mu_);
    stopping_ = false;
    started_ = false;
  }

  void worker_loop() {
    t_in_worker = true;
    std::unique_lock<std::mutex> lk(mu_);
    for (;;) {
      cv_work_.wait(lk, [&] { return stopping_ || (task_ != nullptr && next_ < n_tasks_); });
      if (stopping_) return;
      const int i = next_++;
      const auto* t = task_;
      lk.unlock();
      (*t)(i);
      lk.lock();
      if (--remaining_ == 0) cv_done_.notify_all();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_work_;
  std::condition_variable cv_done_;
  std::vector<std::thread> workers_;
  const std::function<void(int)>* task_ = nullptr;
  int n_tasks_ = 0;
  int next_ = 0;
  int remaining_ = 0;
  bool started_ = false;
  bool stopping_ = false;
};

}  // namespace

void set_thread_count(int n) { g_thread_count = n; }

int thread_count() { return Pool::instance().size(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  if (t_in_worker) {  // nested call from a pool task: run inline
    fn(0, n);
    return;
  }
  const int nt = Pool::instance().size();
  if (nt <= 1 || n == 1) {
    fn(0, n);
    return;
  }
  // Static chunking, ~4 chunks per thread. Chunk boundaries depend only on n
  // and the thread count, never on scheduling.
  const std::size_t chunks = std::min<std::size_t>(n, static_cast<std::size_t>(nt) * 4);
  const std::function<void(int)> task = [&](int c) {
    const std::size_t b = n * static_cast<std::size_t>(c) / chunks;
    const std::size_t e = n * (static_cast<std::size_t>(c) + 1) / chunks;
    if (b < e) fn(b, e);
  };
  Pool::instance().run(static_cast<int>(chunks), task);
}

}  // namespace sfanc
