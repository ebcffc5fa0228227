#pragma once

// Deterministic fork/join helpers.
//
// All lattice reductions follow the same two-phase scheme: worker threads
// produce one partial result per row (each row accumulated left-to-right by a
// single thread), then the row partials are combined on the calling thread by
// a fixed pairwise tree.  The combination order depends only on the row count,
// never on the number of workers, so diagnostics are bit-identical for 1, 2,
// or 4 threads.

#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace glvx {

inline int default_thread_count() {
    if (const char* env = std::getenv("GLVX_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

class ThreadPool {
  public:
    explicit ThreadPool(int n_threads) : n_(n_threads < 1 ? 1 : n_threads) {
        for (int t = 1; t < n_; ++t)
            workers_.emplace_back([this, t] { worker_loop(t); });
    }

    ~ThreadPool() {
        {
            std::unique_lock<std::mutex> lk(mu_);
            stop_ = true;
            ++generation_;
        }
        cv_start_.notify_all();
        for (auto& w : workers_) w.join();
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    int size() const { return n_; }

    // Runs fn(first_row, last_row) on each worker for a static contiguous
    // partition of [0, n_rows).  Blocks until every chunk is done.
    void run(long n_rows, const std::function<void(long, long)>& fn) {
        if (n_ == 1 || n_rows < n_) {
            fn(0, n_rows);
            return;
        }
        {
            std::unique_lock<std::mutex> lk(mu_);
            task_ = &fn;
            rows_ = n_rows;
            pending_ = n_ - 1;
            ++generation_;
        }
        cv_start_.notify_all();
        chunk(0)(fn); // thread 0 is the caller
        std::unique_lock<std::mutex> lk(mu_);
        cv_done_.wait(lk, [this] { return pending_ == 0; });
        task_ = nullptr;
    }

  private:
    struct Range {
        long lo, hi;
        void operator()(const std::function<void(long, long)>& fn) const { fn(lo, hi); }
    };

    Range chunk(int t) const {
        long base = rows_ / n_, rem = rows_ % n_;
        long lo = t * base + std::min<long>(t, rem);
        long hi = lo + base + (t < rem ? 1 : 0);
        return {lo, hi};
    }

    void worker_loop(int t) {
        unsigned long seen = 0;
        for (;;) {
            const std::function<void(long, long)>* task = nullptr;
            {
                std::unique_lock<std::mutex> lk(mu_);
                cv_start_.wait(lk, [&] { return generation_ != seen; });
                seen = generation_;
                if (stop_) return;
                task = task_;
            }
            if (!task) continue;
            chunk(t)(*task);
            {
                std::unique_lock<std::mutex> lk(mu_);
                if (--pending_ == 0) cv_done_.notify_one();
            }
        }
    }

    int n_;
    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_start_, cv_done_;
    const std::function<void(long, long)>* task_ = nullptr;
    long rows_ = 0;
    int pending_ = 0;
    unsigned long generation_ = 0;
    bool stop_ = false;
};

// Process-wide pool.  The first call fixes the worker count: an explicit
// override (from --threads) wins, otherwise GLVX_THREADS, otherwise 1.
inline ThreadPool& shared_pool(int override_n = 0) {
    static ThreadPool pool(override_n >= 1 ? override_n : default_thread_count());
    return pool;
}

// Convenience wrapper: fn(row) for every row in [0, n_rows), chunked as in run.
template <typename Fn>
void for_rows(ThreadPool& pool, long n_rows, Fn&& fn) {
    pool.run(n_rows, [&](long lo, long hi) {
        for (long i = lo; i < hi; ++i) fn(i);
    });
}

// Pairwise tree sum over [lo, hi); association depends only on element count.
inline double pairwise_sum(const std::vector<double>& v, size_t lo, size_t hi) {
    size_t n = hi - lo;
    if (n <= 4) {
        double s = 0.0;
        for (size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    size_t mid = lo + n / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(v, 0, v.size());
}

// Deterministic parallel reduction: row_fn(i) -> partial for row i, summed by
// the fixed tree above.
inline double reduce_rows(ThreadPool& pool, long n_rows,
                          const std::function<double(long)>& row_fn) {
    std::vector<double> partial(static_cast<size_t>(n_rows), 0.0);
    pool.run(n_rows, [&](long lo, long hi) {
        for (long i = lo; i < hi; ++i) partial[static_cast<size_t>(i)] = row_fn(i);
    });
    return pairwise_sum(partial);
}

} // namespace glvx
