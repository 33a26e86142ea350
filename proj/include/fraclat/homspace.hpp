#pragma once

// The SL_{d+1}(R)/SL_{d+1}(Z) toolkit: diagonal and unipotent one-parameter
// subgroups, lattice bases with LLL stabilization, exact lattice-point
// enumeration in boxes, Siegel transforms (plain and gcd-restricted), and an
// exact Haar sampler for d=1.
//
// All enumeration runs on LLL-reduced bases so that strongly distorted inputs
// (diagonal flows with t up to 1e9) keep full f64 accuracy. Box membership on
// the boundary is decided with compensated (two-product) arithmetic.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraclat/rng.hpp"

namespace fraclat {

constexpr int kMaxDim = 4;  // ambient matrices up to 5x5
constexpr std::uint64_t kGcdUnrestricted = UINT64_MAX;

// ---------------------------------------------------------------------------
// Group elements

struct GroupElement {
    Eigen::MatrixXd mat;  // (d+1)x(d+1), determinant 1 up to tolerance

    int d() const { return static_cast<int>(mat.rows()) - 1; }

    double det() const { return mat.determinant(); }

    // Rescale to determinant exactly 1 (up to rounding).
    void renormalize() {
        const int n = static_cast<int>(mat.rows());
        const double dt = mat.determinant();
        if (dt <= 0.0) throw std::domain_error("GroupElement: nonpositive determinant");
        mat /= std::pow(dt, 1.0 / n);
    }
};

inline void check_dim(int d) {
    if (d < 1 || d > kMaxDim)
        throw std::invalid_argument("dimension d must be in [1," + std::to_string(kMaxDim) + "]");
}

// a(t) = diag(t^{1/(d+1)},...,t^{1/(d+1)}, t^{-d/(d+1)})
inline GroupElement make_a(double t, int d) {
    check_dim(d);
    if (!(t > 0.0)) throw std::invalid_argument("make_a: t must be positive");
    const int n = d + 1;
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
    const double expand = std::pow(t, 1.0 / n);
    for (int i = 0; i < d; ++i) m(i, i) = expand;
    m(d, d) = std::pow(t, -static_cast<double>(d) / n);
    return {m};
}

// u(s) = identity with s in the first d entries of the last column
inline GroupElement make_u(const Eigen::VectorXd& s) {
    const int d = static_cast<int>(s.size());
    check_dim(d);
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d + 1, d + 1);
    for (int i = 0; i < d; ++i) m(i, d) = s[i];
    return {m};
}

// a(t)u(s) applied to the integer vector (-p, q); cross-checked against the
// closed form (t^{1/(d+1)}(q s - p), t^{-d/(d+1)} q).
inline Eigen::VectorXd dani_vector(double t, const Eigen::VectorXd& s,
                                   const Eigen::VectorXd& p, double q) {
    const int d = static_cast<int>(s.size());
    check_dim(d);
    if (p.size() != d) throw std::invalid_argument("dani_vector: p has wrong size");
    Eigen::VectorXd v(d + 1);
    v.head(d) = -p;
    v[d] = q;
    const Eigen::VectorXd product = make_a(t, d).mat * (make_u(s).mat * v);
    Eigen::VectorXd closed(d + 1);
    const double expand = std::pow(t, 1.0 / (d + 1));
    closed.head(d) = expand * (q * s - p);
    closed[d] = std::pow(t, -static_cast<double>(d) / (d + 1)) * q;
    for (int i = 0; i <= d; ++i)
        if (std::abs(product[i] - closed[i]) > 1e-12 * std::max(1.0, std::abs(closed[i])))
            throw std::domain_error("dani_vector: matrix product deviates from closed form");
    return product;
}

inline double operator_norm(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()[0];
}

// ---------------------------------------------------------------------------
// Boxes

struct Box {
    Eigen::VectorXd lower, upper;
    std::vector<bool> lower_closed, upper_closed;

    Box() = default;
    Box(Eigen::VectorXd lo, Eigen::VectorXd up,
        std::vector<bool> lc, std::vector<bool> uc)
        : lower(std::move(lo)), upper(std::move(up)),
          lower_closed(std::move(lc)), upper_closed(std::move(uc)) {
        validate();
    }

    static Box closed(const Eigen::VectorXd& lo, const Eigen::VectorXd& up) {
        const auto n = static_cast<std::size_t>(lo.size());
        return Box(lo, up, std::vector<bool>(n, true), std::vector<bool>(n, true));
    }

    void validate() const {
        const auto n = lower.size();
        if (upper.size() != n || lower_closed.size() != static_cast<std::size_t>(n) ||
            upper_closed.size() != static_cast<std::size_t>(n))
            throw std::invalid_argument("Box: inconsistent sizes");
        for (Eigen::Index i = 0; i < n; ++i)
            if (!(lower[i] < upper[i]))
                throw std::invalid_argument("Box: lower must be < upper in every coordinate");
    }

    int dim() const { return static_cast<int>(lower.size()); }

    double volume() const {
        double v = 1.0;
        for (Eigen::Index i = 0; i < lower.size(); ++i) v *= upper[i] - lower[i];
        return v;
    }

    Eigen::VectorXd center() const { return 0.5 * (lower + upper); }

    double circumradius() const { return 0.5 * (upper - lower).norm(); }
};

// ---------------------------------------------------------------------------
// Compensated arithmetic for boundary decisions

namespace detail {

// Error-free product via fma.
inline void two_prod(double a, double b, double& hi, double& lo) {
    hi = a * b;
    lo = std::fma(a, b, -hi);
}

// Kahan-Babuska-Neumaier accumulation of sum(terms); returns hi + compensation.
struct CompSum {
    double s = 0.0, c = 0.0;
    void add(double x) {
        const double t = s + x;
        if (std::abs(s) >= std::abs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }
    double value() const { return s + c; }
};

// Sign of (sum_j row[j]*z[j]) - bound, computed with two-product splitting.
// Returns -1, 0, +1.
inline int boundary_sign(const Eigen::RowVectorXd& row, const std::vector<long long>& z,
                         double bound) {
    CompSum acc;
    acc.add(-bound);
    for (std::size_t j = 0; j < z.size(); ++j) {
        if (z[j] == 0) continue;
        double hi, lo;
        two_prod(row[static_cast<Eigen::Index>(j)], static_cast<double>(z[j]), hi, lo);
        acc.add(hi);
        acc.add(lo);
    }
    const double v = acc.value();
    if (v > 0.0) return 1;
    if (v < 0.0) return -1;
    return 0;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Lattice bases and LLL

struct LatticeBasis {
    Eigen::MatrixXd columns;  // basis vectors as columns, det ~ +-1
    bool reduced = false;

    explicit LatticeBasis(Eigen::MatrixXd cols, bool red = false)
        : columns(std::move(cols)), reduced(red) {
        if (columns.rows() != columns.cols() || columns.rows() < 2)
            throw std::invalid_argument("LatticeBasis: need a square matrix of size >= 2");
        if (columns.rows() > kMaxDim + 1)
            throw std::invalid_argument("LatticeBasis: dimension too large");
    }

    static LatticeBasis standard(int d) {
        check_dim(d);
        return LatticeBasis(Eigen::MatrixXd::Identity(d + 1, d + 1));
    }

    static LatticeBasis from_group(const GroupElement& g) { return LatticeBasis(g.mat); }

    int n() const { return static_cast<int>(columns.rows()); }

    double det() const { return columns.determinant(); }

    // Scale back to |det| = 1 when floating point drift accumulates.
    void renormalize_det(double drift_tol = 1e-9) {
        const double dt = std::abs(det());
        if (dt < 1e-12) throw std::domain_error("LatticeBasis: numerically singular");
        if (std::abs(dt - 1.0) > drift_tol)
            columns /= std::pow(dt, 1.0 / n());
    }
};

struct LLLResult {
    LatticeBasis basis;  // reduced basis C = B * transform
    Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> transform;          // U
    Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> inverse_transform;  // U^{-1}, C * U^{-1} = B
};

namespace detail {

struct GramSchmidt {
    Eigen::MatrixXd bstar;  // orthogonalized columns
    Eigen::MatrixXd mu;     // mu(i,j) = <C_i, B*_j>/<B*_j,B*_j>, j < i
    Eigen::VectorXd norms2;

    void compute(const Eigen::MatrixXd& C) {
        const int n = static_cast<int>(C.cols());
        bstar = C;
        mu = Eigen::MatrixXd::Zero(n, n);
        norms2.resize(n);
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd v = C.col(i);
            for (int j = 0; j < i; ++j) {
                mu(i, j) = C.col(i).dot(bstar.col(j)) / norms2[j];
                v -= mu(i, j) * bstar.col(j);
            }
            bstar.col(i) = v;
            norms2[i] = v.squaredNorm();
            if (!(norms2[i] > 0.0))
                throw std::domain_error("LLL: numerically singular basis");
        }
    }
};

}  // namespace detail

// LLL reduction with delta = 0.99. The returned integer matrices certify the
// change of basis exactly.
inline LLLResult lll_reduce(const LatticeBasis& input, double delta = 0.99) {
    const int n = input.n();
    if (std::abs(std::abs(input.det()) - 1.0) > 1e-6)
        throw std::invalid_argument("lll_reduce: determinant drifted beyond tolerance");
    Eigen::MatrixXd C = input.columns;
    using IMat = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;
    IMat U = IMat::Identity(n, n);
    IMat Uinv = IMat::Identity(n, n);

    detail::GramSchmidt gs;
    gs.compute(C);

    int k = 1;
    int guard = 0;
    while (k < n) {
        if (++guard > 100000) throw std::domain_error("LLL: failed to converge");
        // size-reduce column k
        for (int j = k - 1; j >= 0; --j) {
            const double m = std::round(gs.mu(k, j));
            if (m != 0.0) {
                const long long mi = static_cast<long long>(m);
                C.col(k) -= m * C.col(j);
                U.col(k) -= mi * U.col(j);
                Uinv.row(j) += mi * Uinv.row(k);
                gs.compute(C);
            }
        }
        const double lhs = gs.norms2[k];
        const double rhs = (delta - gs.mu(k, k - 1) * gs.mu(k, k - 1)) * gs.norms2[k - 1];
        if (lhs >= rhs) {
            ++k;
        } else {
            C.col(k).swap(C.col(k - 1));
            U.col(k).swap(U.col(k - 1));
            Uinv.row(k).swap(Uinv.row(k - 1));
            gs.compute(C);
            k = std::max(k - 1, 1);
        }
    }
    LLLResult out{LatticeBasis(C, true), std::move(U), std::move(Uinv)};
    return out;
}

// ---------------------------------------------------------------------------
// Shortest vector (exact in dimension <= 5 via enumeration on a reduced basis)

struct ShortestVector {
    Eigen::VectorXd vector;
    double norm;
    std::vector<long long> coeffs;  // with respect to the input basis
};

inline ShortestVector shortest_vector(const LatticeBasis& basis) {
    const LLLResult red = lll_reduce(basis);
    const Eigen::MatrixXd& C = red.basis.columns;
    const int n = red.basis.n();
    detail::GramSchmidt gs;
    gs.compute(C);

    double best = C.col(0).squaredNorm();
    std::vector<long long> best_z(n, 0);
    best_z[0] = 1;
    std::vector<long long> z(n, 0);

    // Depth-first search over integer coordinates, last level first.
    auto search = [&](auto&& self, int level, double partial) -> void {
        if (partial >= best * (1.0 + 1e-12)) return;
        if (level < 0) {
            bool zero = true;
            for (int i = 0; i < n; ++i)
                if (z[static_cast<std::size_t>(i)] != 0) { zero = false; break; }
            if (zero) return;
            if (partial < best) {
                best = partial;
                best_z = z;
            }
            return;
        }
        double center = 0.0;
        for (int j = level + 1; j < n; ++j)
            center -= gs.mu(j, level) * static_cast<double>(z[static_cast<std::size_t>(j)]);
        const double room = best * (1.0 + 1e-12) - partial;
        const double w = std::sqrt(std::max(0.0, room / gs.norms2[level]));
        const long long zlo = static_cast<long long>(std::ceil(center - w - 1e-12));
        const long long zhi = static_cast<long long>(std::floor(center + w + 1e-12));
        for (long long zi = zlo; zi <= zhi; ++zi) {
            const double diff = static_cast<double>(zi) - center;
            const double add = diff * diff * gs.norms2[level];
            if (partial + add > best * (1.0 + 1e-12)) continue;
            z[static_cast<std::size_t>(level)] = zi;
            self(self, level - 1, partial + add);
        }
        z[static_cast<std::size_t>(level)] = 0;
    };
    search(search, n - 1, 0.0);

    ShortestVector out;
    Eigen::VectorXd zv(n);
    for (int i = 0; i < n; ++i) zv[i] = static_cast<double>(best_z[static_cast<std::size_t>(i)]);
    out.vector = C * zv;
    out.norm = out.vector.norm();
    out.coeffs.resize(n);
    for (int i = 0; i < n; ++i) {
        long long acc = 0;
        for (int j = 0; j < n; ++j) acc += red.transform(i, j) * best_z[static_cast<std::size_t>(j)];
        out.coeffs[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

inline double lambda1(const LatticeBasis& basis) { return shortest_vector(basis).norm; }

// ---------------------------------------------------------------------------
// Lattice points in a box

struct LatticePoint {
    Eigen::VectorXd x;
    std::vector<long long> coeffs;  // with respect to the basis handed in

    bool is_origin() const {
        for (long long c : coeffs)
            if (c != 0) return false;
        return true;
    }

    std::uint64_t content() const {
        std::uint64_t g = 0;
        for (long long c : coeffs)
            g = std::gcd(g, static_cast<std::uint64_t>(c < 0 ? -c : c));
        return g;
    }
};

namespace detail {

// Membership with per-coordinate open/closed flags. Coordinates within
// boundary_window of an endpoint are re-decided with compensated arithmetic.
inline bool box_contains(const Box& box, const Eigen::MatrixXd& C,
                         const std::vector<long long>& z, const Eigen::VectorXd& w,
                         double boundary_window = 1e-9) {
    for (int i = 0; i < box.dim(); ++i) {
        const double lo = box.lower[i], up = box.upper[i];
        double v = w[i];
        const bool near_lo = std::abs(v - lo) <= boundary_window * std::max(1.0, std::abs(lo));
        const bool near_up = std::abs(v - up) <= boundary_window * std::max(1.0, std::abs(up));
        if (near_lo) {
            const int s = boundary_sign(C.row(i), z, lo);
            if (s < 0 || (s == 0 && !box.lower_closed[static_cast<std::size_t>(i)])) return false;
            if (s == 0) continue;  // exactly on the closed lower face
        } else if (v < lo) {
            return false;
        }
        if (near_up) {
            const int s = boundary_sign(C.row(i), z, up);
            if (s > 0 || (s == 0 && !box.upper_closed[static_cast<std::size_t>(i)])) return false;
        } else if (v > up) {
            return false;
        }
        if (!near_lo && !near_up) {
            if (v <= lo && !box.lower_closed[static_cast<std::size_t>(i)]) return false;
            if (v >= up && !box.upper_closed[static_cast<std::size_t>(i)]) return false;
        }
    }
    return true;
}

}  // namespace detail

constexpr double kEnumRefusalLimit = 1e8;

// All lattice points of span_Z(basis columns) inside the box, endpoint flags
// honored exactly. Candidates come from sphere enumeration on the reduced
// basis around the box center.
inline std::vector<LatticePoint> enumerate_in_box(const LatticeBasis& basis, const Box& box) {
    if (box.dim() != basis.n())
        throw std::invalid_argument("enumerate_in_box: box/basis dimension mismatch");
    const double absdet = std::abs(basis.det());
    if (absdet < 1e-12) throw std::domain_error("enumerate_in_box: singular basis");
    const double predicted = box.volume() / absdet;
    if (predicted > kEnumRefusalLimit)
        throw std::domain_error("enumerate_in_box: box too large, predicted ~" +
                                std::to_string(predicted) + " points");

    const LLLResult red = lll_reduce(basis);
    const Eigen::MatrixXd& C = red.basis.columns;
    const int n = red.basis.n();
    detail::GramSchmidt gs;
    gs.compute(C);

    const Eigen::VectorXd center = box.center();
    const double R = box.circumradius() * (1.0 + 1e-12) + 1e-9;
    const double R2 = R * R;

    // center in Gram-Schmidt coordinates
    Eigen::VectorXd t(n);
    for (int i = 0; i < n; ++i) t[i] = center.dot(gs.bstar.col(i)) / gs.norms2[i];

    std::vector<LatticePoint> result;
    std::vector<long long> z(n, 0);

    auto search = [&](auto&& self, int level, double partial) -> void {
        if (level < 0) {
            Eigen::VectorXd zv(n);
            for (int i = 0; i < n; ++i) zv[i] = static_cast<double>(z[static_cast<std::size_t>(i)]);
            Eigen::VectorXd w = C * zv;
            // convert to coefficients of the original basis before the box test
            std::vector<long long> v(static_cast<std::size_t>(n), 0);
            for (int i = 0; i < n; ++i) {
                long long acc = 0;
                for (int j = 0; j < n; ++j) acc += red.transform(i, j) * z[static_cast<std::size_t>(j)];
                v[static_cast<std::size_t>(i)] = acc;
            }
            if (detail::box_contains(box, C, z, w)) {
                LatticePoint p;
                p.x = std::move(w);
                p.coeffs = std::move(v);
                result.push_back(std::move(p));
            }
            return;
        }
        double proj = t[level];
        for (int j = level + 1; j < n; ++j)
            proj -= gs.mu(j, level) * static_cast<double>(z[static_cast<std::size_t>(j)]);
        const double room = R2 - partial;
        if (room < 0.0) return;
        const double w = std::sqrt(room / gs.norms2[level]);
        const long long zlo = static_cast<long long>(std::ceil(proj - w - 1e-12));
        const long long zhi = static_cast<long long>(std::floor(proj + w + 1e-12));
        for (long long zi = zlo; zi <= zhi; ++zi) {
            const double diff = static_cast<double>(zi) - proj;
            const double add = diff * diff * gs.norms2[level];
            if (add > room * (1.0 + 1e-12)) continue;
            z[static_cast<std::size_t>(level)] = zi;
            self(self, level - 1, partial + add);
        }
        z[static_cast<std::size_t>(level)] = 0;
    };
    search(search, n - 1, 0.0);
    return result;
}

// Siegel transform of the box indicator: number of nonzero lattice points in the box.
inline std::uint64_t siegel_transform(const LatticeBasis& basis, const Box& box) {
    std::uint64_t count = 0;
    for (const auto& p : enumerate_in_box(basis, box))
        if (!p.is_origin()) ++count;
    return count;
}

// Restricted Siegel transform: count only points whose integer coordinate
// vector has gcd <= m. Pass kGcdUnrestricted for the plain transform.
inline std::uint64_t restricted_siegel_transform(const LatticeBasis& basis, const Box& box,
                                                 std::uint64_t m) {
    if (m < 1) throw std::invalid_argument("restricted_siegel_transform: m must be >= 1");
    std::uint64_t count = 0;
    for (const auto& p : enumerate_in_box(basis, box))
        if (!p.is_origin() && p.content() <= m) ++count;
    return count;
}

// c_m = zeta(2)^{-1} sum_{t=1}^m t^{-2}; the Haar mean of the m-restricted
// Siegel transform of a box of volume 1 (d=1).
inline double c_m(std::uint64_t m) {
    if (m < 1) throw std::invalid_argument("c_m: m must be >= 1");
    const double inv_zeta2 = 6.0 / (std::numbers::pi * std::numbers::pi);
    if (m == kGcdUnrestricted) return 1.0;
    if (m <= 10'000'000ULL) {
        double s = 0.0;
        for (std::uint64_t t = m; t >= 1; --t) s += 1.0 / (static_cast<double>(t) * static_cast<double>(t));
        return inv_zeta2 * s;
    }
    // tail expansion: sum_{t>m} t^{-2} = 1/m - 1/(2m^2) + 1/(6m^3) - ...
    const double dm = static_cast<double>(m);
    const double tail = 1.0 / dm - 1.0 / (2.0 * dm * dm) + 1.0 / (6.0 * dm * dm * dm);
    return 1.0 - inv_zeta2 * tail;
}

// ---------------------------------------------------------------------------
// Exact Haar sampler on SL_2(R)/SL_2(Z)
//
// A Haar-random unimodular lattice in R^2 is e^{i theta} (Z + zZ)/sqrt(y) with
// z = x+iy drawn from the hyperbolic area measure (3/pi) y^{-2} dx dy on the
// modular fundamental domain {|x| <= 1/2, x^2+y^2 >= 1} and theta uniform.
// z is drawn by rejection from the proposal |x| <= 1/2, y >= sqrt(3)/2 with
// density proportional to y^{-2}; the acceptance rate is (pi/3)/(2/sqrt 3).
class HaarSamplerSL2 {
public:
    explicit HaarSamplerSL2(std::uint64_t seed) : rng_(seed) {}

    GroupElement sample() {
        double x, y;
        for (;;) {
            ++proposals_;
            x = rng_.uniform(-0.5, 0.5);
            const double u = rng_.uniform01();
            y = (std::sqrt(3.0) / 2.0) / (1.0 - u);  // density ~ y^{-2} on [sqrt(3)/2, inf)
            if (x * x + y * y >= 1.0) {
                ++accepts_;
                break;
            }
        }
        const double theta = rng_.uniform(0.0, 2.0 * std::numbers::pi);
        Eigen::Matrix2d rot;
        rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
        Eigen::Matrix2d an;
        const double sy = std::sqrt(y);
        an << 1.0 / sy, x / sy, 0.0, sy;
        GroupElement g{rot * an};
        return g;
    }

    std::uint64_t proposals() const { return proposals_; }
    std::uint64_t accepts() const { return accepts_; }
    double acceptance_rate() const {
        return proposals_ ? static_cast<double>(accepts_) / static_cast<double>(proposals_) : 0.0;
    }

private:
    Rng rng_;
    std::uint64_t proposals_ = 0;
    std::uint64_t accepts_ = 0;
};

inline GroupElement haar_sample_sl2(std::uint64_t seed) {
    HaarSamplerSL2 sampler(seed);
    return sampler.sample();
}

}  // namespace fraclat
