#pragma once

// Khintchine-Schmidt counting harness: approximation functions, direct
// solution counts (two-sided, one-sided, primitive), the block/schedule
// machinery, and the exact cross-check identifying block counts with lattice
// point counts in boxes under the diagonal-unipotent change of variables.
//
// Counting works in f64 off the boundary; any count whose window endpoint
// falls within 1e-7 of an integer is re-decided with two-product compensated
// arithmetic, so both counting routes resolve ties identically.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraclat/homspace.hpp"
#include "fraclat/ifs.hpp"
#include "fraclat/parallel.hpp"
#include "fraclat/rng.hpp"

namespace fraclat {

constexpr double kPsiRefusalBound = 10.0;
constexpr double kBoundaryGuard = 1e-7;

// ---------------------------------------------------------------------------
// Approximation functions

enum class PsiExtension { Ceil, Floor };  // lower- vs upper-bound machinery

class ApproxFunction {
public:
    enum class Family { Power, PowerLog, Table };

    // psi(q) = c * q^{-a}
    static ApproxFunction power(double c, double a, PsiExtension ext = PsiExtension::Ceil) {
        ApproxFunction f;
        f.family_ = Family::Power;
        f.c_ = c;
        f.a_ = a;
        f.ext_ = ext;
        f.validate();
        return f;
    }

    // psi(q) = c * q^{-a} * max(log q, log 2)^{-b}; the clamp keeps q=1 finite
    static ApproxFunction power_log(double c, double a, double b,
                                    PsiExtension ext = PsiExtension::Ceil) {
        ApproxFunction f;
        f.family_ = Family::PowerLog;
        f.c_ = c;
        f.a_ = a;
        f.b_ = b;
        f.ext_ = ext;
        f.validate();
        return f;
    }

    // explicit table psi(1..n); constant beyond the last entry
    static ApproxFunction table(std::vector<double> values, PsiExtension ext = PsiExtension::Ceil) {
        ApproxFunction f;
        f.family_ = Family::Table;
        f.table_ = std::move(values);
        f.ext_ = ext;
        f.validate();
        return f;
    }

    Family family() const { return family_; }
    double param_c() const { return c_; }
    double param_a() const { return a_; }
    double param_b() const { return b_; }
    PsiExtension extension() const { return ext_; }
    void set_extension(PsiExtension e) { ext_ = e; }

    double at_integer(std::uint64_t q) const {
        if (q < 1) throw std::invalid_argument("ApproxFunction: q must be >= 1");
        switch (family_) {
            case Family::Power:
                return c_ * std::pow(static_cast<double>(q), -a_);
            case Family::PowerLog: {
                const double lq = std::max(std::log(static_cast<double>(q)), std::log(2.0));
                return c_ * std::pow(static_cast<double>(q), -a_) * std::pow(lq, -b_);
            }
            case Family::Table: {
                const std::size_t i = std::min<std::size_t>(q - 1, table_.size() - 1);
                return table_[i];
            }
        }
        return 0.0;
    }

    // Extension to reals: psi(ceil q) or psi(floor q) per flag.
    double at_real(double q) const {
        if (!(q >= 1.0)) throw std::invalid_argument("ApproxFunction: real argument must be >= 1");
        const double rounded = ext_ == PsiExtension::Ceil ? std::ceil(q) : std::floor(q);
        return at_integer(static_cast<std::uint64_t>(std::max(1.0, rounded)));
    }

    // Partial sums sum_{q=1}^{N} psi(q)^d at the requested checkpoints.
    std::vector<double> partial_sums_pow_d(const std::vector<std::uint64_t>& checkpoints,
                                           int d) const {
        std::vector<std::uint64_t> sorted = checkpoints;
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> out(sorted.size(), 0.0);
        double acc = 0.0;
        std::uint64_t q = 1;
        for (std::size_t k = 0; k < sorted.size(); ++k) {
            for (; q <= sorted[k]; ++q) acc += std::pow(at_integer(q), d);
            out[k] = acc;
        }
        // map back to the original order
        std::vector<double> result(checkpoints.size());
        for (std::size_t i = 0; i < checkpoints.size(); ++i) {
            const auto it = std::lower_bound(sorted.begin(), sorted.end(), checkpoints[i]);
            result[i] = out[static_cast<std::size_t>(it - sorted.begin())];
        }
        return result;
    }

private:
    void validate() const {
        if (family_ == Family::Table) {
            if (table_.empty()) throw std::invalid_argument("ApproxFunction: empty table");
            for (double v : table_)
                if (!(v >= 0.0)) throw std::invalid_argument("ApproxFunction: negative value");
        } else if (!(c_ >= 0.0)) {
            throw std::invalid_argument("ApproxFunction: c must be >= 0");
        }
        // non-increasing on a grid of integers
        double prev = at_integer(1);
        for (std::uint64_t q = 2; q <= 10'000; ++q) {
            const double v = at_integer(q);
            if (v > prev * (1.0 + 1e-12) + 1e-300)
                throw std::invalid_argument("ApproxFunction: not non-increasing at q=" +
                                            std::to_string(q));
            prev = v;
        }
    }

    Family family_ = Family::Power;
    double c_ = 1.0, a_ = 1.0, b_ = 0.0;
    std::vector<double> table_;
    PsiExtension ext_ = PsiExtension::Ceil;
};

// ---------------------------------------------------------------------------
// Exact window predicates (two-product compensated)

namespace detail {

struct DD {
    double hi, lo;
};

inline DD two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

inline DD qs_product(std::int64_t q, double s) {
    const double qd = static_cast<double>(q);
    const double hi = qd * s;
    return {hi, std::fma(qd, s, -hi)};
}

// value of q*s - p as a double-double
inline DD qs_minus_p(std::int64_t q, double s, std::int64_t p) {
    const DD qs = qs_product(q, s);
    const DD diff = two_sum(qs.hi, -static_cast<double>(p));
    return {diff.hi, diff.lo + qs.lo};
}

inline int dd_sign(const DD& v) {
    if (v.hi > 0.0) return 1;
    if (v.hi < 0.0) return -1;
    if (v.lo > 0.0) return 1;
    if (v.lo < 0.0) return -1;
    return 0;
}

inline int dd_cmp(const DD& v, double bound) {
    const DD diff = two_sum(v.hi, -bound);
    return dd_sign({diff.hi, diff.lo + v.lo});
}

// 0 <= q*s - p < psi, decided exactly for the f64 inputs
inline bool one_sided_hit_exact(std::int64_t q, double s, std::int64_t p, double psi) {
    const DD v = qs_minus_p(q, s, p);
    return dd_sign(v) >= 0 && dd_cmp(v, psi) < 0;
}

// |q*s - p| < psi
inline bool two_sided_hit_exact(std::int64_t q, double s, std::int64_t p, double psi) {
    DD v = qs_minus_p(q, s, p);
    if (dd_sign(v) < 0) v = {-v.hi, -v.lo};
    return dd_cmp(v, psi) < 0;
}

inline bool near_integer(double x, double window = kBoundaryGuard) {
    return std::abs(x - std::round(x)) < window;
}

// #p with 0 <= q*s - p < psi, i.e. p in (q*s - psi, q*s]
inline std::int64_t one_sided_window_count(std::int64_t q, double s, double psi) {
    const double qs = static_cast<double>(q) * s;
    if (!near_integer(qs) && !near_integer(qs - psi))
        return static_cast<std::int64_t>(std::floor(qs)) -
               static_cast<std::int64_t>(std::floor(qs - psi));
    std::int64_t count = 0;
    const std::int64_t plo = static_cast<std::int64_t>(std::floor(qs - psi)) - 1;
    const std::int64_t phi = static_cast<std::int64_t>(std::floor(qs)) + 1;
    for (std::int64_t p = plo; p <= phi; ++p)
        if (one_sided_hit_exact(q, s, p, psi)) ++count;
    return count;
}

// #p with |q*s - p| < psi (open window)
inline std::int64_t two_sided_window_count(std::int64_t q, double s, double psi) {
    if (psi <= 0.0) return 0;
    const double qs = static_cast<double>(q) * s;
    if (!near_integer(qs - psi) && !near_integer(qs + psi)) {
        const std::int64_t hi = static_cast<std::int64_t>(std::ceil(qs + psi)) - 1;
        const std::int64_t lo = static_cast<std::int64_t>(std::floor(qs - psi)) + 1;
        return std::max<std::int64_t>(0, hi - lo + 1);
    }
    std::int64_t count = 0;
    const std::int64_t plo = static_cast<std::int64_t>(std::floor(qs - psi)) - 1;
    const std::int64_t phi = static_cast<std::int64_t>(std::ceil(qs + psi)) + 1;
    for (std::int64_t p = plo; p <= phi; ++p)
        if (two_sided_hit_exact(q, s, p, psi)) ++count;
    return count;
}

// the p's hitting the one-sided window, materialized (needed for gcd filters)
inline void one_sided_window_values(std::int64_t q, double s, double psi,
                                    std::vector<std::int64_t>& out) {
    out.clear();
    const double qs = static_cast<double>(q) * s;
    const std::int64_t plo = static_cast<std::int64_t>(std::floor(qs - psi)) - 1;
    const std::int64_t phi = static_cast<std::int64_t>(std::floor(qs)) + 1;
    for (std::int64_t p = plo; p <= phi; ++p)
        if (one_sided_hit_exact(q, s, p, psi)) out.push_back(p);
}

}  // namespace detail

inline void check_psi_regime(const ApproxFunction& psi) {
    if (psi.at_integer(1) > kPsiRefusalBound)
        throw std::domain_error("psi exceeds " + std::to_string(kPsiRefusalBound) +
                                "; degenerate regime refused");
}

// |{(p,q) in Z^d x [1,N] : ||q s - p||_inf < psi(q)}|
inline std::int64_t count_two_sided(const Eigen::VectorXd& s, const ApproxFunction& psi,
                                    std::int64_t N) {
    if (N < 1) throw std::invalid_argument("count_two_sided: N must be >= 1");
    check_psi_regime(psi);
    const int d = static_cast<int>(s.size());
    std::int64_t total = 0;
    for (std::int64_t q = 1; q <= N; ++q) {
        const double pq = psi.at_integer(static_cast<std::uint64_t>(q));
        std::int64_t prod = 1;
        for (int i = 0; i < d && prod > 0; ++i)
            prod *= detail::two_sided_window_count(q, s[i], pq);
        total += prod;
    }
    return total;
}

// |{(p,q) : 0 <= q s_i - p_i < psi(q) for all i, q in [1,N]}|
inline std::int64_t count_one_sided(const Eigen::VectorXd& s, const ApproxFunction& psi,
                                    std::int64_t N) {
    if (N < 1) throw std::invalid_argument("count_one_sided: N must be >= 1");
    check_psi_regime(psi);
    const int d = static_cast<int>(s.size());
    std::int64_t total = 0;
    for (std::int64_t q = 1; q <= N; ++q) {
        const double pq = psi.at_integer(static_cast<std::uint64_t>(q));
        std::int64_t prod = 1;
        for (int i = 0; i < d && prod > 0; ++i)
            prod *= detail::one_sided_window_count(q, s[i], pq);
        total += prod;
    }
    return total;
}

// one-sided count restricted to gcd(p_1,...,p_d,q) = 1
inline std::int64_t count_primitive(const Eigen::VectorXd& s, const ApproxFunction& psi,
                                    std::int64_t N) {
    if (N < 1) throw std::invalid_argument("count_primitive: N must be >= 1");
    check_psi_regime(psi);
    const int d = static_cast<int>(s.size());
    std::int64_t total = 0;
    std::vector<std::vector<std::int64_t>> hits(static_cast<std::size_t>(d));
    for (std::int64_t q = 1; q <= N; ++q) {
        const double pq = psi.at_integer(static_cast<std::uint64_t>(q));
        bool empty = false;
        for (int i = 0; i < d; ++i) {
            detail::one_sided_window_values(q, s[i], pq, hits[static_cast<std::size_t>(i)]);
            if (hits[static_cast<std::size_t>(i)].empty()) {
                empty = true;
                break;
            }
        }
        if (empty) continue;
        // walk the (small) cartesian product of per-coordinate hits
        std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
        for (;;) {
            std::uint64_t g = static_cast<std::uint64_t>(q);
            for (int i = 0; i < d; ++i) {
                const std::int64_t p = hits[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
                g = std::gcd(g, static_cast<std::uint64_t>(p < 0 ? -p : p));
            }
            if (g == 1) ++total;
            int lvl = d - 1;
            for (; lvl >= 0; --lvl) {
                if (++idx[static_cast<std::size_t>(lvl)] <
                    hits[static_cast<std::size_t>(lvl)].size())
                    break;
                idx[static_cast<std::size_t>(lvl)] = 0;
            }
            if (lvl < 0) break;
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// Block schedule and the Dani cross-check

// Per-block scale parameters: psi(tau^k)^d tau^k = r_k^{d+1}, t_k = tau^k / psi(tau^k).
struct BlockSchedule {
    double tau;
    int d;

    BlockSchedule(double tau_, int d_) : tau(tau_), d(d_) {
        if (!(tau > 1.0 && tau <= 2.0)) throw std::invalid_argument("BlockSchedule: tau must be in (1,2]");
        check_dim(d);
    }

    double psi_at_block(const ApproxFunction& psi, int k) const {
        return psi.at_real(std::pow(tau, k));
    }

    double t_k(const ApproxFunction& psi, int k) const {
        const double p = psi_at_block(psi, k);
        if (!(p > 0.0)) throw std::domain_error("BlockSchedule: psi vanishes at block");
        return std::pow(tau, k) / p;
    }

    double r_k(const ApproxFunction& psi, int k) const {
        const double p = psi_at_block(psi, k);
        return std::pow(std::pow(p, d) * std::pow(tau, k), 1.0 / (d + 1));
    }
};

// Integer q-window of block k: q in (tau^{k-1}, tau^k].
inline std::pair<std::int64_t, std::int64_t> block_window(double tau, int k) {
    const double lo = std::pow(tau, k - 1);
    const double hi = std::pow(tau, k);
    return {static_cast<std::int64_t>(std::floor(lo)) + 1,
            static_cast<std::int64_t>(std::floor(hi))};
}

// |{(p,q), q in the k-th window : 0 <= q s_i - p_i < psi(tau^k)}| by direct loop.
inline std::int64_t block_count(const Eigen::VectorXd& s, const ApproxFunction& psi,
                                double tau, int k) {
    if (k < 1) throw std::invalid_argument("block_count: k must be >= 1");
    const double pk = psi.at_real(std::pow(tau, k));
    const auto [qlo, qhi] = block_window(tau, k);
    const int d = static_cast<int>(s.size());
    std::int64_t total = 0;
    for (std::int64_t q = qlo; q <= qhi; ++q) {
        std::int64_t prod = 1;
        for (int i = 0; i < d && prod > 0; ++i)
            prod *= detail::one_sided_window_count(q, s[i], pk);
        total += prod;
    }
    return total;
}

// Diagnostic split of block indices: k is in the "big box" family when
// r_k > t_k^{gamma1}. Large boxes are handled by the volume formula with the
// counting-lemma error bound rather than by exact enumeration.
constexpr double kDefaultGamma1 = 0.01;
constexpr double kVolumeRouteThreshold = 1e3;  // switch to the volume route when r_k exceeds this

inline bool block_is_kb(const ApproxFunction& psi, double tau, int k, int d,
                        double gamma1 = kDefaultGamma1) {
    BlockSchedule sched(tau, d);
    return sched.r_k(psi, k) > std::pow(sched.t_k(psi, k), gamma1);
}

struct KbEstimate {
    double volume = 0.0;       // Leb(R_k)
    double error_bound = 0.0;  // counting-lemma bound, valid when precondition_ok
    bool precondition_ok = false;
};

// Volume estimate for the k-th block count with the counting-lemma error bound
// 2^{d+1} sqrt(d+1) max_i(|g| / T_i) Leb(R), evaluated on the LLL-reduced
// basis of a(t_k) u(s).
inline KbEstimate kb_volume_estimate(const Eigen::VectorXd& s, const ApproxFunction& psi,
                                     double tau, int k) {
    const int d = static_cast<int>(s.size());
    BlockSchedule sched(tau, d);
    const double rk = sched.r_k(psi, k);
    const double tk = sched.t_k(psi, k);
    KbEstimate out;
    out.volume = (1.0 - 1.0 / tau) * std::pow(rk, d + 1);
    const LatticeBasis reduced =
        lll_reduce(LatticeBasis(make_a(tk, d).mat * make_u(s).mat)).basis;
    const double norm_g = operator_norm(reduced.columns);
    // R_k has d sides of length r_k and one of length (1 - 1/tau) r_k
    const double min_side = (1.0 - 1.0 / tau) * rk;
    out.precondition_ok = norm_g <= min_side / std::sqrt(d + 1);
    out.error_bound =
        std::pow(2.0, d + 1) * std::sqrt(d + 1) * (norm_g / min_side) * out.volume;
    return out;
}

struct DaniCheckResult {
    std::int64_t direct = 0;
    std::int64_t lattice = 0;
    bool equal = false;
    double t_k = 0.0;
    double r_k = 0.0;
};

// Computes the k-th block count twice: by the direct q-loop and by enumerating
// the lattice a(t_k) u(s) Z^{d+1} inside R_k = [0,r_k)^d x (r_k/tau, r_k].
// Both routes share the integer q-window and the exact one-sided predicate;
// they differ in how candidate solutions are generated.
inline DaniCheckResult dani_cross_check(const Eigen::VectorXd& s, const ApproxFunction& psi,
                                        double tau, int k) {
    const int d = static_cast<int>(s.size());
    check_dim(d);
    BlockSchedule sched(tau, d);
    DaniCheckResult out;
    out.t_k = sched.t_k(psi, k);
    out.r_k = sched.r_k(psi, k);
    if (!std::isfinite(out.t_k) || !std::isfinite(out.r_k))
        throw std::domain_error("dani_cross_check: schedule values not finite");
    const double predicted = std::pow(out.r_k, d + 1);
    if (predicted > kEnumRefusalLimit)
        throw std::domain_error("dani_cross_check: predicted point count too large");

    const double pk = sched.psi_at_block(psi, k);
    const auto [qlo, qhi] = block_window(tau, k);

    out.direct = block_count(s, psi, tau, k);

    // lattice route: gather candidates from a slightly inflated box, then test
    // membership with the same exact predicate the direct route uses
    const LatticeBasis basis(make_a(out.t_k, d).mat * make_u(s).mat);
    const double margin = 1e-6 * out.r_k + 1e-9;
    Eigen::VectorXd lo(d + 1), hi(d + 1);
    for (int i = 0; i < d; ++i) {
        lo[i] = -margin;
        hi[i] = out.r_k + margin;
    }
    lo[d] = out.r_k / tau - margin;
    hi[d] = out.r_k + margin;
    const Box candidates_box = Box::closed(lo, hi);

    std::int64_t lattice_count = 0;
    for (const auto& pt : enumerate_in_box(basis, candidates_box)) {
        const std::int64_t q = pt.coeffs[static_cast<std::size_t>(d)];
        if (q < qlo || q > qhi) continue;
        bool all = true;
        for (int i = 0; i < d && all; ++i) {
            const std::int64_t p = -pt.coeffs[static_cast<std::size_t>(i)];
            all = detail::one_sided_hit_exact(q, s[i], p, pk);
        }
        if (all) ++lattice_count;
    }
    out.lattice = lattice_count;
    out.equal = out.direct == out.lattice;
    return out;
}

// ---------------------------------------------------------------------------
// Schmidt ratio experiment

struct CountRecord {
    std::uint64_t sample_id = 0;
    std::uint64_t seed = 0;
    Eigen::VectorXd s;
    std::int64_t N = 0;
    std::int64_t two_sided = 0;
    std::int64_t one_sided = 0;
    std::int64_t primitive = 0;
    double sum_psi_d = 0.0;
    double ratio2 = 0.0;  // two_sided / (2^d sum)
    double ratio1 = 0.0;  // one_sided / sum
    double ratioP = 0.0;  // primitive / (zeta(d+1)^{-1} sum)
};

inline double zeta_int(int s) {
    switch (s) {
        case 2: return std::numbers::pi * std::numbers::pi / 6.0;
        case 3: return 1.2020569031595942854;
        case 4: return std::pow(std::numbers::pi, 4) / 90.0;
        case 5: return 1.0369277551433699263;
        default: {
            if (s < 2) throw std::invalid_argument("zeta_int: s must be >= 2");
            double acc = 0.0;
            for (int n = 1; n <= 100000; ++n) acc += std::pow(n, -s);
            return acc;
        }
    }
}

// For `samples` points drawn from the model's stationary-measure approximation,
// all three counts and their ratios to the theoretical sums at each N in the grid.
inline std::vector<CountRecord> schmidt_ratio_experiment(
        const IFSModel& model, const ApproxFunction& psi,
        const std::vector<std::int64_t>& N_grid, std::uint64_t samples,
        std::uint64_t seed, int depth = -1) {
    if (N_grid.empty() || samples == 0)
        throw std::invalid_argument("schmidt_ratio_experiment: empty grid or no samples");
    check_psi_regime(psi);
    const int d = model.dimension();
    const int n_depth = depth > 0 ? depth : model.default_depth();

    std::vector<std::int64_t> grid = N_grid;
    std::sort(grid.begin(), grid.end());
    const std::int64_t n_max = grid.back();
    if (grid.front() < 1)
        throw std::invalid_argument("schmidt_ratio_experiment: N must be >= 1");

    std::vector<std::uint64_t> checkpoints;
    for (auto N : grid) checkpoints.push_back(static_cast<std::uint64_t>(N));
    const std::vector<double> sums = psi.partial_sums_pow_d(checkpoints, d);

    // numeric divergence check: the top half of the range must still contribute
    const double head = psi.partial_sums_pow_d({static_cast<std::uint64_t>(n_max / 2)}, d)[0];
    if (sums.back() - head < 1.0)
        throw std::domain_error("schmidt_ratio_experiment: sum psi(q)^d is numerically "
                                "convergent over the requested range");

    const double zinv = 1.0 / zeta_int(d + 1);
    const double two_pow_d = std::pow(2.0, d);

    std::vector<CountRecord> records(samples * grid.size());
    parallel_chunks(samples, 1, [&](std::size_t, std::uint64_t b, std::uint64_t e) {
        std::vector<std::vector<std::int64_t>> hits(static_cast<std::size_t>(d));
        for (std::uint64_t si = b; si < e; ++si) {
            const std::uint64_t item_seed = seed_for_item(seed, si);
            Rng rng(item_seed);
            const Eigen::VectorXd s = sample_point(model, n_depth, rng);
            std::int64_t c2 = 0, c1 = 0, cp = 0;
            std::size_t next_grid = 0;
            for (std::int64_t q = 1; q <= n_max; ++q) {
                const double pq = psi.at_integer(static_cast<std::uint64_t>(q));
                std::int64_t prod2 = 1, prod1 = 1;
                bool any = true;
                for (int i = 0; i < d; ++i) {
                    detail::one_sided_window_values(q, s[i], pq, hits[static_cast<std::size_t>(i)]);
                    const auto k1 = static_cast<std::int64_t>(hits[static_cast<std::size_t>(i)].size());
                    prod1 *= k1;
                    prod2 *= detail::two_sided_window_count(q, s[i], pq);
                    if (k1 == 0) any = false;
                }
                c2 += prod2;
                c1 += prod1;
                if (any) {
                    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
                    for (;;) {
                        std::uint64_t g = static_cast<std::uint64_t>(q);
                        for (int i = 0; i < d; ++i) {
                            const std::int64_t p =
                                hits[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
                            g = std::gcd(g, static_cast<std::uint64_t>(p < 0 ? -p : p));
                        }
                        if (g == 1) ++cp;
                        int lvl = d - 1;
                        for (; lvl >= 0; --lvl) {
                            if (++idx[static_cast<std::size_t>(lvl)] <
                                hits[static_cast<std::size_t>(lvl)].size())
                                break;
                            idx[static_cast<std::size_t>(lvl)] = 0;
                        }
                        if (lvl < 0) break;
                    }
                }
                while (next_grid < grid.size() && q == grid[next_grid]) {
                    CountRecord rec;
                    rec.sample_id = si;
                    rec.seed = item_seed;
                    rec.s = s;
                    rec.N = grid[next_grid];
                    rec.two_sided = c2;
                    rec.one_sided = c1;
                    rec.primitive = cp;
                    rec.sum_psi_d = sums[next_grid];
                    rec.ratio2 = rec.two_sided / (two_pow_d * rec.sum_psi_d);
                    rec.ratio1 = rec.one_sided / rec.sum_psi_d;
                    rec.ratioP = rec.primitive / (zinv * rec.sum_psi_d);
                    records[si * grid.size() + next_grid] = std::move(rec);
                    ++next_grid;
                }
            }
        }
    });
    return records;
}

}  // namespace fraclat
