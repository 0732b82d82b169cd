#include "bsvie/threading.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace bsvie {

namespace {
int g_threads = 0;

int effective_threads() {
    if (g_threads > 0) return g_threads;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// One dispatched run. Chunks are claimed through the job's own counter, so a
// straggling worker that still holds an old job can never contaminate a
// newer one.
struct Job {
    const std::function<void(int)>* chunk_fn = nullptr;
    int nchunks = 0;
    std::atomic<int> next{0};
    std::atomic<int> pending{0};
    std::mutex mu;
    std::condition_variable done;
    std::exception_ptr error;

    void work() {
        for (;;) {
            const int c = next.fetch_add(1);
            if (c >= nchunks) return;
            try {
                (*chunk_fn)(c);
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu);
                if (!error) error = std::current_exception();
            }
            if (pending.fetch_sub(1) == 1) {
                std::lock_guard<std::mutex> lk(mu);
                done.notify_all();
            }
        }
    }
};

// Persistent worker pool; not reentrant (library code never nests parallel
// regions).
class Pool {
public:
    static Pool& instance() {
        static Pool pool;
        return pool;
    }

    void run(int nchunks, const std::function<void(int)>& chunk_fn, int workers) {
        if (workers <= 1 || nchunks <= 1) {
            for (int c = 0; c < nchunks; ++c) chunk_fn(c);
            return;
        }
        ensure_workers(workers - 1);
        auto job = std::make_shared<Job>();
        job->chunk_fn = &chunk_fn;
        job->nchunks = nchunks;
        job->pending = nchunks;
        {
            std::lock_guard<std::mutex> lk(mu_);
            current_ = job;
            ++generation_;
        }
        cv_work_.notify_all();
        job->work();  // the calling thread participates
        {
            std::unique_lock<std::mutex> lk(job->mu);
            job->done.wait(lk, [&] { return job->pending.load() == 0; });
        }
        {
            std::lock_guard<std::mutex> lk(mu_);
            if (current_ == job) current_.reset();
        }
        if (job->error) std::rethrow_exception(job->error);
    }

private:
    Pool() = default;
    ~Pool() {
        {
            std::lock_guard<std::mutex> lk(mu_);
            stop_ = true;
        }
        cv_work_.notify_all();
        for (auto& t : workers_) t.join();
    }

    void ensure_workers(int n) {
        std::lock_guard<std::mutex> lk(mu_);
        while (static_cast<int>(workers_.size()) < n)
            workers_.emplace_back([this] { worker_main(); });
    }

    void worker_main() {
        std::uint64_t seen = 0;
        for (;;) {
            std::shared_ptr<Job> job;
            {
                std::unique_lock<std::mutex> lk(mu_);
                cv_work_.wait(lk, [&] { return stop_ || (current_ && generation_ != seen); });
                if (stop_) return;
                seen = generation_;
                job = current_;
            }
            if (job) job->work();
        }
    }

    std::mutex mu_;
    std::condition_variable cv_work_;
    std::vector<std::thread> workers_;
    std::shared_ptr<Job> current_;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
};

}  // namespace

void set_thread_count(int n) { g_threads = n < 0 ? 0 : n; }
int thread_count() { return effective_threads(); }

void parallel_chunks(std::int64_t n, const std::function<void(int, std::int64_t, std::int64_t)>& fn) {
    if (n <= 0) return;
    const std::int64_t chunk = (n + kChunks - 1) / kChunks;
    const int nchunks = static_cast<int>((n + chunk - 1) / chunk);
    // Small workloads are not worth the synchronisation.
    const int workers = n < 8192 ? 1 : std::min(effective_threads(), nchunks);
    const std::function<void(int)> chunk_fn = [&](int c) {
        fn(c, c * chunk, std::min<std::int64_t>(n, (c + 1) * chunk));
    };
    Pool::instance().run(nchunks, chunk_fn, workers);
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
    parallel_chunks(n, [&](int, std::int64_t lo, std::int64_t hi) { fn(lo, hi); });
}

}  // namespace bsvie
