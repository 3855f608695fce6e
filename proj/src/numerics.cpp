#include "swx/numerics.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace swx {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
    return splitmix64_mix(a ^ splitmix64_mix(b + kGolden));
}

// ---------------------------------------------------------------------------
// RngStream
// ---------------------------------------------------------------------------

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept
    : master_seed_(master_seed), stream_id_(stream_id) {
    std::uint64_t key = mix_seed(master_seed, stream_id);
    for (auto& word : s_) {
        key += kGolden;
        word = splitmix64_mix(key);
    }
    // xoshiro must not start from the all-zero state.
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = kGolden;
}

std::uint64_t RngStream::next_u64() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngStream::uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) noexcept {
    // Lemire's multiply-shift with rejection of the biased low region.
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = next_u64();
            m = static_cast<__uint128_t>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

RngStream RngStream::substream(std::uint64_t id) const noexcept {
    return RngStream(mix_seed(master_seed_, stream_id_), id);
}

// ---------------------------------------------------------------------------
// Variates
// ---------------------------------------------------------------------------

bool draw_bernoulli(RngStream& stream, double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::domain_error("draw_bernoulli: probability " + std::to_string(p) +
                                " outside [0, 1]");
    }
    return stream.uniform() < p;
}

double draw_gaussian(RngStream& stream) {
    const double u1 = stream.uniform_open();
    const double u2 = stream.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double draw_t1(RngStream& stream) {
    return std::tan(std::numbers::pi * (stream.uniform_open() - 0.5));
}

// ---------------------------------------------------------------------------
// Normal distribution
// ---------------------------------------------------------------------------

double std_normal_cdf(double x) noexcept {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double std_normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        throw std::domain_error("std_normal_quantile: argument " + std::to_string(u) +
                                " outside (0, 1)");
    }
    // Acklam's rational approximation (relative error < 1.15e-9).
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (u < p_low) {
        const double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (u <= 1.0 - p_low) {
        const double q = u - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-u));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // One Halley step against the erfc-based CDF.
    const double e = std_normal_cdf(x) - u;
    const double pdf_inv = std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    const double step = e * pdf_inv;
    x -= step / (1.0 + 0.5 * x * step);
    return x;
}

// ---------------------------------------------------------------------------
// Parallel loop
// ---------------------------------------------------------------------------

namespace {

std::atomic<int> g_worker_override{0};
thread_local int t_parallel_depth = 0;

int env_worker_count() {
    if (const char* env = std::getenv("SWX_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

void set_worker_count(int workers) { g_worker_override.store(workers > 0 ? workers : 0); }

int worker_count() {
    const int forced = g_worker_override.load();
    return forced > 0 ? forced : env_worker_count();
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const int workers = worker_count();
    if (n == 0) return;
    if (workers <= 1 || n == 1 || t_parallel_depth > 0) {
        ++t_parallel_depth;
        try {
            for (std::size_t i = 0; i < n; ++i) body(i);
        } catch (...) {
            --t_parallel_depth;
            throw;
        }
        --t_parallel_depth;
        return;
    }

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::size_t error_index = n;
    std::exception_ptr error;

    auto run = [&] {
        ++t_parallel_depth;
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
        --t_parallel_depth;
    };

    const std::size_t spawn = std::min<std::size_t>(static_cast<std::size_t>(workers), n) - 1;
    std::vector<std::thread> pool;
    pool.reserve(spawn);
    for (std::size_t k = 0; k < spawn; ++k) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace swx
