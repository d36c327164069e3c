#include "fmce/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace fmce {

namespace {

int env_worker_cap() {
    if (const char* env = std::getenv("FMCE_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::atomic<int> g_cap_override{0};

// Minimal persistent pool. One job at a time (job_mutex_); the submitting
// thread works alongside the pool threads. Workers pull task indices from
// a shared atomic counter, so scheduling is dynamic but the set of tasks
// and their payloads never depend on the worker count.
class Pool {
  public:
    static Pool& instance() {
        static Pool pool;
        return pool;
    }

    void run(size_t n_tasks, const std::function<void(size_t)>& task, int cap) {
        std::lock_guard<std::mutex> job_lock(job_mutex_);
        {
            std::lock_guard<std::mutex> lk(m_);
            // spawn lazily up to cap-1 helpers; existing extras stay parked
            while (static_cast<int>(threads_.size()) < cap - 1) {
                const size_t id = threads_.size();
                const uint64_t born_at = generation_;
                threads_.emplace_back([this, id, born_at] { worker_loop(id, born_at); });
            }
            task_ = &task;
            n_tasks_ = n_tasks;
            next_.store(0);
            helpers_ = static_cast<size_t>(cap - 1);
            remaining_ = threads_.size();  // every spawned worker checks in once
            generation_++;
        }
        cv_start_.notify_all();

        work(&task);  // submitting thread participates

        std::unique_lock<std::mutex> lk(m_);
        cv_done_.wait(lk, [&] { return remaining_ == 0; });
        task_ = nullptr;
    }

  private:
    Pool() = default;

    ~Pool() {
        {
            std::lock_guard<std::mutex> lk(m_);
            stopping_ = true;
        }
        cv_start_.notify_all();
        for (auto& t : threads_) t.join();
    }

    void worker_loop(size_t id, uint64_t seen) {
        while (true) {
            const std::function<void(size_t)>* task = nullptr;
            {
                std::unique_lock<std::mutex> lk(m_);
                cv_start_.wait(lk, [&] { return stopping_ || generation_ != seen; });
                if (stopping_) return;
                seen = generation_;
                if (id < helpers_) task = task_;
            }
            if (task) work(task);
            {
                std::lock_guard<std::mutex> lk(m_);
                remaining_--;
            }
            cv_done_.notify_one();
        }
    }

    void work(const std::function<void(size_t)>* task) {
        while (true) {
            const size_t i = next_.fetch_add(1);
            if (i >= n_tasks_) break;
            (*task)(i);
        }
    }

    std::mutex job_mutex_;
    std::mutex m_;
    std::condition_variable cv_start_, cv_done_;
    std::vector<std::thread> threads_;
    const std::function<void(size_t)>* task_ = nullptr;
    size_t n_tasks_ = 0;
    std::atomic<size_t> next_{0};
    size_t helpers_ = 0;
    size_t remaining_ = 0;
    uint64_t generation_ = 0;
    bool stopping_ = false;
};

}  // namespace

int worker_cap() {
    const int ovr = g_cap_override.load();
    return ovr >= 1 ? ovr : env_worker_cap();
}

void set_worker_cap(int cap) { g_cap_override.store(cap); }

void parallel_chunks(size_t count, size_t chunk_size,
                     const std::function<void(size_t, size_t, size_t)>& fn) {
    if (count == 0) return;
    const size_t n_chunks = chunk_count(count, chunk_size);
    const int cap = worker_cap();
    if (cap <= 1 || n_chunks <= 1) {
        for (size_t i = 0; i < n_chunks; ++i) {
            const size_t lo = i * chunk_size;
            fn(i, lo, std::min(count, lo + chunk_size));
        }
        return;
    }
    Pool::instance().run(
        n_chunks,
        [&](size_t i) {
            const size_t lo = i * chunk_size;
            fn(i, lo, std::min(count, lo + chunk_size));
        },
        cap);
}

}  // namespace fmce
