#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace swx {

// ---------------------------------------------------------------------------
// Seed mixing
//
// SplitMix64 finalizer. Used to derive independent stream keys from
// (master_seed, stream_id) pairs and to fold structured identifiers
// (cell index, replication, method) into a single 64-bit seed.
// ---------------------------------------------------------------------------
std::uint64_t splitmix64_mix(std::uint64_t z) noexcept;
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

// ---------------------------------------------------------------------------
// RngStream: counter-addressed random stream.
//
// A stream is fully determined by (master_seed, stream_id); there is no
// global state. The generator behind a stream is xoshiro256** seeded from a
// SplitMix64 sequence keyed on the mixed pair, so any stream can be created
// on any worker before execution order is known.
// ---------------------------------------------------------------------------
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept;

    std::uint64_t next_u64() noexcept;

    // Uniform on [0, 1) with 53 bits of resolution.
    double uniform() noexcept;
    // Uniform on the open interval (0, 1).
    double uniform_open() noexcept;
    // Unbiased integer in [0, n); n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) noexcept;

    // Child stream keyed on this stream's identity and `id`.
    RngStream substream(std::uint64_t id) const noexcept;

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

private:
    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
    std::uint64_t s_[4];
};

// p must lie in [0, 1]; p = 0 and p = 1 give constant output.
bool draw_bernoulli(RngStream& stream, double p);
double draw_gaussian(RngStream& stream);
// Standard Cauchy via tan(pi (U - 1/2)).
double draw_t1(RngStream& stream);

double std_normal_cdf(double x) noexcept;
// Throws std::domain_error unless 0 < u < 1.
double std_normal_quantile(double u);

// ---------------------------------------------------------------------------
// Deterministic parallel loop.
//
// Runs body(i) for i in [0, n). Results must be written to per-index slots;
// the schedule never influences output. Worker count comes from
// set_worker_count() or, failing that, the SWX_THREADS environment variable.
// Nested calls run serially on the calling worker.
// ---------------------------------------------------------------------------
void set_worker_count(int workers);
int worker_count();
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace swx
