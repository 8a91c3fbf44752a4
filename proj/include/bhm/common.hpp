#ifndef BHM_COMMON_HPP
#define BHM_COMMON_HPP

// Shared value types and small utilities for the bhm library.
//
// Conventions used throughout:
//   - points and directions live in R^2 as Vec2,
//   - complex scalars are std::complex<double> (alias cplx),
//   - partial derivatives are carried in Jet3 objects indexed by the
//     multi-index (a1, a2) with a1 + a2 <= 3,
//   - errors are reported with standard exception types; functions are pure
//     unless stated otherwise.

#include <complex>
#include <cstdint>
#include <cstdlib>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>
#include <atomic>
#include <vector>

namespace bhm {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr cplx iu{0.0, 1.0};  // imaginary unit

// ---------------------------------------------------------------------------
// 2D vectors
// ---------------------------------------------------------------------------

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }

// unit direction for a polar angle
inline Vec2 unit_dir(double theta) { return {std::cos(theta), std::sin(theta)}; }

// ---------------------------------------------------------------------------
// Derivative multi-indices and third-order jets
// ---------------------------------------------------------------------------

// (a1, a2): differentiate a1 times in x1 and a2 times in x2; total order <= 3.
// Order 3 is what the transverse-force boundary operator needs.
struct MultiIndex {
    int a1 = 0;
    int a2 = 0;

    int total() const { return a1 + a2; }
    bool valid() const { return a1 >= 0 && a2 >= 0 && a1 + a2 <= 3; }
};

// Value plus all Cartesian partials through order 3 of a complex field at one
// point. Mixed partials are stored once per (a1, a2), so symmetry holds by
// construction. `order` says how many derivative levels are actually filled
// (3 for kernel/incident jets; consumers needing third derivatives must check).
struct Jet3 {
    cplx d[4][4] = {};  // d[a1][a2], slots with a1+a2 > 3 stay zero
    int order = 3;

    cplx& at(int a1, int a2) { return d[a1][a2]; }
    const cplx& at(int a1, int a2) const { return d[a1][a2]; }

    cplx operator()(MultiIndex a) const {
        if (!a.valid()) throw std::invalid_argument("Jet3: multi-index order exceeds 3");
        return d[a.a1][a.a2];
    }

    cplx val() const { return d[0][0]; }

    Jet3& operator+=(const Jet3& o) {
        for (int a = 0; a <= 3; ++a)
            for (int b = 0; a + b <= 3; ++b) d[a][b] += o.d[a][b];
        if (o.order < order) order = o.order;
        return *this;
    }
    Jet3& operator*=(cplx s) {
        for (int a = 0; a <= 3; ++a)
            for (int b = 0; a + b <= 3; ++b) d[a][b] *= s;
        return *this;
    }
};

inline Jet3 operator+(Jet3 a, const Jet3& b) { a += b; return a; }
inline Jet3 operator*(cplx s, Jet3 a) { a *= s; return a; }

// Laplacian and gradient shorthands used by the boundary operators.
inline cplx jet_lap(const Jet3& j) { return j.d[2][0] + j.d[0][2]; }
inline cplx jet_dn(const Jet3& j, Vec2 n) { return n.x * j.d[1][0] + n.y * j.d[0][1]; }

// ---------------------------------------------------------------------------
// Parallel loop
// ---------------------------------------------------------------------------

// Number of worker threads: hardware concurrency, optionally capped by the
// BHM_THREADS environment variable (values < 1 are treated as 1).
inline int thread_budget() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("BHM_THREADS")) {
        char* end = nullptr;
        long cap = std::strtol(env, &end, 10);
        if (end != env) {
            if (cap < 1) cap = 1;
            if (cap < n) n = static_cast<int>(cap);
        }
    }
    return n;
}

// Runs fn(i) for i in [0, count). Each index is processed exactly once; fn
// must only write to its own slot of any shared output, which keeps results
// deterministic regardless of scheduling. Exceptions from fn are rethrown.
template <class Fn>
void parallel_for(std::int64_t count, Fn&& fn) {
    if (count <= 0) return;
    int workers = thread_budget();
    if (workers > count) workers = static_cast<int>(count);
    if (workers <= 1) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::int64_t i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace bhm

#endif  // BHM_COMMON_HPP
