#include "lownoise/kernels.hpp"

#include "kernels_vtable.hpp"

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace lownoise::kernels {

// ----------------------------------------------------------------------------
// scalar reference kernels
// ----------------------------------------------------------------------------

namespace scalar_impl {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sqdist(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double sum(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i];
    return s;
}

void scale(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void dot4(const double* a, const double* b0, const double* b1, const double* b2, const double* b3,
          std::size_t n, double* out4) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double ai = a[i];
        s0 += ai * b0[i];
        s1 += ai * b1[i];
        s2 += ai * b2[i];
        s3 += ai * b3[i];
    }
    out4[0] = s0;
    out4[1] = s1;
    out4[2] = s2;
    out4[3] = s3;
}

void axpy4(const double* alphas, const double* x0, const double* x1, const double* x2,
           const double* x3, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += alphas[0] * x0[i] + alphas[1] * x1[i] + alphas[2] * x2[i] + alphas[3] * x3[i];
    }
}

}  // namespace scalar_impl

static constexpr Vtable kScalarVtable{scalar_impl::dot,  scalar_impl::axpy, scalar_impl::sqdist,
                                      scalar_impl::sum,  scalar_impl::scale, scalar_impl::dot4,
                                      scalar_impl::axpy4};

#if defined(__x86_64__) || defined(_M_X64)
// Defined in kernels_avx2.cpp (compiled with -mavx2 -mfma).
extern const Vtable kAvx2Vtable;
static bool avx2_supported() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#else
static bool avx2_supported() { return false; }
#endif

#if defined(__aarch64__)
extern const Vtable kNeonVtable;
static bool neon_supported() { return true; }
#else
static bool neon_supported() { return false; }
#endif

static const Vtable* pick_auto() {
#if defined(__x86_64__) || defined(_M_X64)
    if (avx2_supported()) return &kAvx2Vtable;
#endif
#if defined(__aarch64__)
    if (neon_supported()) return &kNeonVtable;
#endif
    return &kScalarVtable;
}

static std::atomic<const Vtable*> g_vtable{nullptr};

static const Vtable* vt() {
    const Vtable* p = g_vtable.load(std::memory_order_acquire);
    if (!p) {
        p = pick_auto();
        g_vtable.store(p, std::memory_order_release);
    }
    return p;
}

Backend active() {
    const Vtable* p = vt();
#if defined(__x86_64__) || defined(_M_X64)
    if (avx2_supported() && p == &kAvx2Vtable) return Backend::avx2;
#endif
#if defined(__aarch64__)
    if (p == &kNeonVtable) return Backend::neon;
#endif
    return Backend::scalar;
}

bool supported(Backend b) {
    switch (b) {
        case Backend::scalar: return true;
        case Backend::avx2: return avx2_supported();
        case Backend::neon: return neon_supported();
    }
    return false;
}

void force(Backend b) {
    if (!supported(b)) throw std::runtime_error(std::string("kernel backend not supported here: ") + backend_name(b));
    switch (b) {
        case Backend::scalar: g_vtable.store(&kScalarVtable); break;
#if defined(__x86_64__) || defined(_M_X64)
        case Backend::avx2: g_vtable.store(&kAvx2Vtable); break;
#endif
#if defined(__aarch64__)
        case Backend::neon: g_vtable.store(&kNeonVtable); break;
#endif
        default: break;
    }
}

void reset() { g_vtable.store(pick_auto()); }

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
    }
    return "?";
}

double dot(const double* a, const double* b, std::size_t n) { return vt()->dot(a, b, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { vt()->axpy(alpha, x, y, n); }
double sqdist(const double* a, const double* b, std::size_t n) { return vt()->sqdist(a, b, n); }
double sum(const double* a, std::size_t n) { return vt()->sum(a, n); }
void scale(double alpha, double* x, std::size_t n) { vt()->scale(alpha, x, n); }

// ----------------------------------------------------------------------------
// thread pool
// ----------------------------------------------------------------------------

namespace {

struct Job {
    const std::function<void(std::size_t)>* fn = nullptr;
    std::size_t n_chunks = 0;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
};

thread_local bool tl_in_worker = false;

class Pool {
public:
    explicit Pool(int workers) {
        for (int i = 0; i < workers; ++i) {
            threads_.emplace_back([this] { worker_loop(); });
        }
    }

    ~Pool() {
        {
            std::unique_lock<std::mutex> lk(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    void run(std::size_t n_chunks, const std::function<void(std::size_t)>& chunk_fn) {
        std::unique_lock<std::mutex> run_lk(run_mu_);
        auto job = std::make_shared<Job>();
        job->fn = &chunk_fn;
        job->n_chunks = n_chunks;
        {
            std::unique_lock<std::mutex> lk(mu_);
            current_ = job;
        }
        cv_.notify_all();
        work_on(*job);  // caller participates
        {
            std::unique_lock<std::mutex> lk(mu_);
            done_cv_.wait(lk, [&] { return job->done.load() == n_chunks; });
            current_.reset();
        }
    }

    int size() const { return static_cast<int>(threads_.size()); }

private:
    void work_on(Job& j) {
        bool saved = tl_in_worker;
        tl_in_worker = true;
        for (;;) {
            std::size_t c = j.next.fetch_add(1);
            if (c >= j.n_chunks) break;
            (*j.fn)(c);
            if (j.done.fetch_add(1) + 1 == j.n_chunks) {
                std::unique_lock<std::mutex> lk(mu_);
                done_cv_.notify_all();
            }
        }
        tl_in_worker = saved;
    }

    void worker_loop() {
        std::shared_ptr<Job> last_seen;
        for (;;) {
            std::shared_ptr<Job> job;
            {
                std::unique_lock<std::mutex> lk(mu_);
                cv_.wait(lk, [&] { return stop_ || (current_ && current_ != last_seen); });
                if (stop_) return;
                job = current_;
                last_seen = job;
            }
            work_on(*job);
        }
    }

    std::vector<std::thread> threads_;
    std::mutex run_mu_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    std::shared_ptr<Job> current_;
    bool stop_ = false;
};

std::atomic<int> g_threads{1};
std::mutex g_pool_mu;
std::unique_ptr<Pool> g_pool;

}  // namespace

void set_threads(int n) {
    if (n < 1) n = 1;
    std::unique_lock<std::mutex> lk(g_pool_mu);
    g_threads.store(n);
    g_pool.reset();  // rebuilt lazily at next parallel_for
}

int threads() { return g_threads.load(); }

void parallel_for(std::size_t n, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (grain == 0) grain = 1;
    int nt = g_threads.load();
    std::size_t n_chunks = (n + grain - 1) / grain;
    if (nt <= 1 || n_chunks <= 1 || tl_in_worker) {
        fn(0, n);
        return;
    }
    {
        std::unique_lock<std::mutex> lk(g_pool_mu);
        if (!g_pool || g_pool->size() != nt - 1) g_pool = std::make_unique<Pool>(nt - 1);
    }
    auto chunk_fn = std::function<void(std::size_t)>([&](std::size_t c) {
        std::size_t b = c * grain;
        std::size_t e = b + grain < n ? b + grain : n;
        fn(b, e);
    });
    g_pool->run(n_chunks, chunk_fn);
}

// ----------------------------------------------------------------------------
// level 3: thin loops over the dispatched level-1 kernels
// ----------------------------------------------------------------------------

void matmul_nt(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
    const Vtable* v = vt();
    auto rows = [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
            const double* ai = A + i * k;
            double* ci = C + i * n;
            std::size_t j = 0;
            double d4[4];
            for (; j + 4 <= n; j += 4) {
                v->dot4(ai, B + j * k, B + (j + 1) * k, B + (j + 2) * k, B + (j + 3) * k, k, d4);
                if (accumulate) {
                    ci[j] += d4[0];
                    ci[j + 1] += d4[1];
                    ci[j + 2] += d4[2];
                    ci[j + 3] += d4[3];
                } else {
                    ci[j] = d4[0];
                    ci[j + 1] = d4[1];
                    ci[j + 2] = d4[2];
                    ci[j + 3] = d4[3];
                }
            }
            for (; j < n; ++j) {
                double d = v->dot(ai, B + j * k, k);
                ci[j] = accumulate ? ci[j] + d : d;
            }
        }
    };
    if (m * n * k >= (std::size_t{1} << 16)) {
        parallel_for(m, 8, rows);
    } else {
        rows(0, m);
    }
}

void matmul_nn(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
    const Vtable* v = vt();
    auto rows = [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
            const double* ai = A + i * k;
            double* ci = C + i * n;
            if (!accumulate)
                for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
            std::size_t l = 0;
            for (; l + 4 <= k; l += 4)
                v->axpy4(ai + l, B + l * n, B + (l + 1) * n, B + (l + 2) * n, B + (l + 3) * n, ci, n);
            for (; l < k; ++l) v->axpy(ai[l], B + l * n, ci, n);
        }
    };
    if (m * n * k >= (std::size_t{1} << 16)) {
        parallel_for(m, 8, rows);
    } else {
        rows(0, m);
    }
}

void matmul_tn(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
    const Vtable* v = vt();
    // C.row(j) accumulates A[i][j] * B.row(i) over i, in ascending i.
    auto rows = [&](std::size_t j0, std::size_t j1) {
        for (std::size_t j = j0; j < j1; ++j) {
            double* cj = C + j * n;
            if (!accumulate)
                for (std::size_t q = 0; q < n; ++q) cj[q] = 0.0;
            std::size_t i = 0;
            double a4[4];
            for (; i + 4 <= m; i += 4) {
                a4[0] = A[i * k + j];
                a4[1] = A[(i + 1) * k + j];
                a4[2] = A[(i + 2) * k + j];
                a4[3] = A[(i + 3) * k + j];
                v->axpy4(a4, B + i * n, B + (i + 1) * n, B + (i + 2) * n, B + (i + 3) * n, cj, n);
            }
            for (; i < m; ++i) v->axpy(A[i * k + j], B + i * n, cj, n);
        }
    };
    if (m * n * k >= (std::size_t{1} << 16)) {
        parallel_for(k, 8, rows);
    } else {
        rows(0, k);
    }
}

void matvec(const double* A, const double* x, double* y, std::size_t m, std::size_t k,
            bool accumulate) {
    const Vtable* v = vt();
    for (std::size_t i = 0; i < m; ++i) {
        double d = v->dot(A + i * k, x, k);
        y[i] = accumulate ? y[i] + d : d;
    }
}

void matvec_t(const double* A, const double* u, double* y, std::size_t m, std::size_t k,
              bool accumulate) {
    const Vtable* v = vt();
    if (!accumulate)
        for (std::size_t j = 0; j < k; ++j) y[j] = 0.0;
    for (std::size_t i = 0; i < m; ++i) v->axpy(u[i], A + i * k, y, k);
}

}  // namespace lownoise::kernels
