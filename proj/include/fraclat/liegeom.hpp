#pragma once

// Lie-algebra geometry of sl_{d+1}: weight spaces for the diagonal flow,
// unipotent conjugates of the lower weight space, wedge-norm angle statistics
// on tuples of subspaces, the algebraic obstruction check, staircase
// (Borel-invariant) subspaces, and randomized transversality witnesses.
//
// Elements of sl_{d+1} are stored as (d+1)x(d+1) matrices; the inner product
// is <A,B> = tr(A^T B), making the elementary matrices E_ij orthonormal.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fraclat/homspace.hpp"
#include "fraclat/ifs.hpp"
#include "fraclat/parallel.hpp"
#include "fraclat/rng.hpp"

namespace fraclat {

constexpr double kRankTol = 1e-8;

inline int lie_dim(int d) { return d * (d + 2); }  // dim sl_{d+1}

inline Eigen::MatrixXd elementary(int n, int i, int j) {
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
    E(i, j) = 1.0;
    return E;
}

inline Eigen::VectorXd vec_of(const Eigen::MatrixXd& M) {
    return Eigen::Map<const Eigen::VectorXd>(M.data(), M.size());
}

inline Eigen::MatrixXd mat_of(const Eigen::VectorXd& v, int n) {
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), n, n);
}

// Traceless matrix viewed as an element of the Lie algebra.
struct LieVector {
    Eigen::MatrixXd m;

    explicit LieVector(Eigen::MatrixXd mm) : m(std::move(mm)) {
        if (m.rows() != m.cols()) throw std::invalid_argument("LieVector: not square");
        if (std::abs(m.trace()) > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
            throw std::invalid_argument("LieVector: trace is not zero");
    }

    double norm() const { return m.norm(); }  // Frobenius = Euclidean in E_ij coordinates
};

// Subspace of the matrix space, held as orthonormal columns of vectorized
// matrices ((d+1)^2 x k).
struct Subspace {
    Eigen::MatrixXd basis;

    Subspace() = default;
    explicit Subspace(Eigen::MatrixXd b) : basis(std::move(b)) {}

    int ambient() const { return static_cast<int>(basis.rows()); }
    int dim() const { return static_cast<int>(basis.cols()); }

    bool is_orthonormal(double tol = 1e-10) const {
        if (dim() == 0) return true;
        return (basis.transpose() * basis -
                Eigen::MatrixXd::Identity(dim(), dim())).cwiseAbs().maxCoeff() <= tol;
    }

    // Re-orthonormalize via QR, dropping numerically dependent columns.
    void repair() {
        if (dim() == 0) return;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
        qr.setThreshold(kRankTol);
        const auto rank = qr.rank();
        basis = qr.householderQ() * Eigen::MatrixXd::Identity(ambient(), rank);
    }

    static Subspace span_matrices(const std::vector<Eigen::MatrixXd>& mats) {
        if (mats.empty()) return Subspace(Eigen::MatrixXd::Zero(0, 0));
        const int amb = static_cast<int>(mats[0].size());
        Eigen::MatrixXd b(amb, static_cast<int>(mats.size()));
        for (std::size_t k = 0; k < mats.size(); ++k)
            b.col(static_cast<Eigen::Index>(k)) = vec_of(mats[k]);
        Subspace s(std::move(b));
        s.repair();
        return s;
    }
};

struct WeightSpaces {
    Subspace g_minus, g_zero, g_plus;
};

// g_- spanned by E_{d+1,j} (j<=d), g_+ by E_{j,d+1}, g_0 their orthogonal
// complement inside the traceless matrices.
inline WeightSpaces weight_spaces(int d) {
    check_dim(d);
    const int n = d + 1;
    std::vector<Eigen::MatrixXd> minus, plus, zero;
    for (int j = 0; j < d; ++j) minus.push_back(elementary(n, d, j));
    for (int j = 0; j < d; ++j) plus.push_back(elementary(n, j, d));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j) zero.push_back(elementary(n, i, j));
    // traceless diagonal part, Gram-Schmidt handled by span_matrices
    for (int i = 0; i < d; ++i)
        zero.push_back(elementary(n, i, i) - elementary(n, i + 1, i + 1));
    WeightSpaces ws;
    ws.g_minus = Subspace::span_matrices(minus);
    ws.g_zero = Subspace::span_matrices(zero);
    ws.g_plus = Subspace::span_matrices(plus);
    return ws;
}

// Ad(g)v = g v g^{-1}, re-projected to exact tracelessness.
inline Eigen::MatrixXd adjoint_action(const GroupElement& g, const Eigen::MatrixXd& v) {
    const int n = static_cast<int>(g.mat.rows());
    Eigen::MatrixXd out = g.mat * v * g.mat.inverse();
    out -= (out.trace() / n) * Eigen::MatrixXd::Identity(n, n);
    return out;
}

inline Subspace adjoint_subspace(const GroupElement& g, const Subspace& s) {
    const int n = static_cast<int>(g.mat.rows());
    std::vector<Eigen::MatrixXd> images;
    images.reserve(static_cast<std::size_t>(s.dim()));
    for (int k = 0; k < s.dim(); ++k)
        images.push_back(adjoint_action(g, mat_of(s.basis.col(k), n)));
    return Subspace::span_matrices(images);
}

// V1(g) = Ad(u(-b)) g_-  and  V2(g) = Ad(u(-b)) (g_- + g_0), where b is the
// translation part of the similarity.
inline Subspace V1_of(const Similarity& sim) {
    const int d = sim.dim();
    const GroupElement u = make_u(-sim.translation);
    return adjoint_subspace(u, weight_spaces(d).g_minus);
}

inline Subspace V2_of(const Similarity& sim) {
    const int d = sim.dim();
    const GroupElement u = make_u(-sim.translation);
    const WeightSpaces ws = weight_spaces(d);
    Eigen::MatrixXd both(ws.g_minus.ambient(), ws.g_minus.dim() + ws.g_zero.dim());
    both << ws.g_minus.basis, ws.g_zero.basis;
    Subspace lez(both);
    return adjoint_subspace(u, lez);
}

// V1 from a translation vector alone (the rotation and ratio do not enter).
inline Subspace V1_of_translation(const Eigen::VectorXd& b) {
    const int d = static_cast<int>(b.size());
    return adjoint_subspace(make_u(-b), weight_spaces(d).g_minus);
}

// ||F_1 ^ ... ^ F_k||: square root of the Gram determinant of the concatenated
// orthonormal bases, computed as the product of QR diagonal entries. Equals 1
// for mutually orthogonal complements, 0 for a dependent family.
inline double wedge_norm(const std::vector<Subspace>& subspaces) {
    if (subspaces.empty()) return 1.0;
    int total = 0;
    const int amb = subspaces.front().ambient();
    for (const auto& s : subspaces) {
        if (s.ambient() != amb) throw std::invalid_argument("wedge_norm: mixed ambient dims");
        total += s.dim();
    }
    if (total == 0) return 1.0;
    if (total > amb) throw std::invalid_argument("wedge_norm: total dimension exceeds ambient");
    Eigen::MatrixXd M(amb, total);
    int at = 0;
    for (const auto& s : subspaces) {
        Subspace t = s;
        if (!t.is_orthonormal()) t.repair();
        if (t.dim() != s.dim()) return 0.0;  // input column set was dependent
        M.middleCols(at, t.dim()) = t.basis;
        at += t.dim();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
    const Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(total, total);
    double w = 1.0;
    for (int i = 0; i < total; ++i) w *= std::abs(R(i, i));
    return std::min(w, 1.0);
}

// Numerical rank at the library-wide tolerance.
inline int numerical_rank(const Eigen::MatrixXd& M, double tol = kRankTol) {
    if (M.size() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    int r = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > tol) ++r;
    return r;
}

// dim(Ad(g) g_-  intersect  W) where W = {M in sl : M e_1 = 0}.
inline int obstruction_check(int d, const GroupElement& g) {
    if (d < 1 || d > kMaxDim) throw std::invalid_argument("obstruction_check: bad dimension");
    if (g.d() != d) throw std::invalid_argument("obstruction_check: group element dimension mismatch");
    const int n = d + 1;
    std::vector<Eigen::MatrixXd> wbasis;
    for (int j = 1; j < n; ++j)
        for (int i = 0; i < n; ++i)
            if (i != j) wbasis.push_back(elementary(n, i, j));
    for (int i = 1; i < n - 1; ++i)
        wbasis.push_back(elementary(n, i, i) - elementary(n, i + 1, i + 1));
    Subspace W = Subspace::span_matrices(wbasis);
    Subspace A = adjoint_subspace(g, weight_spaces(d).g_minus);
    Eigen::MatrixXd concat(W.ambient(), W.dim() + A.dim());
    concat << A.basis, W.basis;
    const int rank = numerical_rank(concat);
    return A.dim() + W.dim() - rank;
}

// ---------------------------------------------------------------------------
// Staircase subspaces (Borel-invariant subspaces of dimension <= d)

struct StaircaseSet {
    std::set<std::pair<int, int>> pairs;  // 1-based (i,j), i < j <= d+1

    bool stable(int d) const {
        for (const auto& [i, j] : pairs) {
            if (i >= 2 && !pairs.count({i - 1, j})) return false;
            if (j <= d && !pairs.count({i, j + 1})) return false;
        }
        return true;
    }

    Subspace subspace(int d) const {
        std::vector<Eigen::MatrixXd> mats;
        for (const auto& [i, j] : pairs) mats.push_back(elementary(d + 1, i - 1, j - 1));
        if (mats.empty()) return Subspace(Eigen::MatrixXd::Zero((d + 1) * (d + 1), 0));
        return Subspace::span_matrices(mats);
    }
};

// All staircase sets of size <= d, by exhaustion over subsets.
inline std::vector<StaircaseSet> enumerate_staircases(int d) {
    check_dim(d);
    std::vector<std::pair<int, int>> all;
    for (int i = 1; i <= d; ++i)
        for (int j = i + 1; j <= d + 1; ++j) all.emplace_back(i, j);
    std::vector<StaircaseSet> out;
    const std::size_t total = all.size();
    for (std::uint32_t mask = 0; mask < (1u << total); ++mask) {
        StaircaseSet s;
        for (std::size_t b = 0; b < total; ++b)
            if (mask & (1u << b)) s.pairs.insert(all[b]);
        if (s.pairs.size() <= static_cast<std::size_t>(d) && s.stable(d)) out.push_back(s);
    }
    std::sort(out.begin(), out.end(), [](const StaircaseSet& a, const StaircaseSet& b) {
        if (a.pairs.size() != b.pairs.size()) return a.pairs.size() < b.pairs.size();
        return a.pairs < b.pairs;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Mild non-concentration statistic

// Fractions of (d+1)-tuples of independent n-step similarity products whose
// V1-subspaces, together with W, have wedge norm <= r, per r in the grid.
inline std::vector<std::pair<double, double>> mnc_statistic(
        const IFSModel& model, int n, const Subspace& W,
        const std::vector<double>& r_grid, std::uint64_t samples, std::uint64_t seed) {
    const int d = model.dimension();
    if (W.dim() != d) throw std::invalid_argument("mnc_statistic: dim W must equal d");
    if (n < 1) throw std::invalid_argument("mnc_statistic: n must be >= 1");
    const auto counts = mc_tally(samples, r_grid.size(),
        [&](std::uint64_t i, std::vector<std::uint64_t>& bins) {
            Rng rng(seed_for_item(seed, i));
            std::vector<Subspace> tuple;
            tuple.reserve(static_cast<std::size_t>(d) + 2);
            for (int k = 0; k <= d; ++k)
                tuple.push_back(V1_of_translation(sample_point(model, n, rng)));
            tuple.push_back(W);
            const double w = wedge_norm(tuple);
            for (std::size_t b = 0; b < r_grid.size(); ++b)
                if (w <= r_grid[b]) ++bins[b];
        });
    std::vector<std::pair<double, double>> out;
    for (std::size_t b = 0; b < r_grid.size(); ++b)
        out.emplace_back(r_grid[b], static_cast<double>(counts[b]) / static_cast<double>(samples));
    return out;
}

// ---------------------------------------------------------------------------
// Transversality witnesses

enum class WitnessMode { UnipotentOnly, General };

struct WitnessResult {
    bool success = false;
    std::vector<GroupElement> tuple;
    double wedge = 0.0;
    int tries = 0;
};

constexpr double kWitnessThreshold = 0.01;

namespace detail {

inline GroupElement random_sl(int n, Rng& rng) {
    for (;;) {
        Eigen::MatrixXd m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
        double dt = m.determinant();
        if (std::abs(dt) < 1e-6) continue;
        if (dt < 0.0) {
            m.col(0) = -m.col(0);
            dt = -dt;
        }
        m /= std::pow(dt, 1.0 / n);
        return {m};
    }
}

// Random search for (d+1) group elements whose Ad-images of g_- together with
// W form a direct sum with wedge norm above the threshold. Accepts dim W <= d;
// the public wrapper enforces dim W == d.
inline WitnessResult transversal_search(int d, const Subspace& W, WitnessMode mode,
                                        std::uint64_t seed, int max_tries) {
    const Subspace gm = weight_spaces(d).g_minus;
    Rng rng(seed);
    WitnessResult best;
    for (int attempt = 1; attempt <= max_tries; ++attempt) {
        std::vector<GroupElement> tuple;
        std::vector<Subspace> family;
        for (int k = 0; k <= d; ++k) {
            GroupElement g = mode == WitnessMode::UnipotentOnly
                ? make_u([&] {
                      Eigen::VectorXd s(d);
                      for (int i = 0; i < d; ++i) s[i] = rng.normal();
                      return s;
                  }())
                : random_sl(d + 1, rng);
            family.push_back(adjoint_subspace(g, gm));
            tuple.push_back(std::move(g));
        }
        if (W.dim() > 0) family.push_back(W);
        const double w = wedge_norm(family);
        if (w > best.wedge) {
            best.wedge = w;
            best.tuple = tuple;
            best.tries = attempt;
        }
        if (w >= kWitnessThreshold) {
            best.success = true;
            best.wedge = w;
            best.tuple = std::move(tuple);
            best.tries = attempt;
            return best;
        }
    }
    best.success = false;
    best.tries = max_tries;
    return best;
}

}  // namespace detail

inline WitnessResult find_transversal_witness(int d, const Subspace& W, WitnessMode mode,
                                              std::uint64_t seed, int max_tries = 100) {
    check_dim(d);
    if (W.dim() != d)
        throw std::invalid_argument("find_transversal_witness: dim W must equal d");
    return detail::transversal_search(d, W, mode, seed, max_tries);
}

// The explicit sl_2 witness pair for W = span(E_12): (Id, Id + E_12).
inline std::vector<GroupElement> sl2_base_case_tuple() {
    GroupElement g1{Eigen::MatrixXd::Identity(2, 2)};
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
    m(0, 1) = 1.0;
    GroupElement g2{m};
    return {g1, g2};
}

// Deterministic witness tuple for d=2 built from the inductive construction:
// g0 = (Id + E_{3,1}) * w_{1,3} with w_{1,3} the Weyl element exchanging the
// first and third rows, followed by two fixed elements of the embedded SL_2.
inline std::vector<GroupElement> sl3_inductive_tuple() {
    Eigen::MatrixXd w13(3, 3);
    w13 << 0, 0, 1,
           0, 1, 0,
          -1, 0, 0;
    Eigen::MatrixXd e31 = Eigen::MatrixXd::Identity(3, 3);
    e31(2, 0) = 1.0;
    GroupElement g0{e31 * w13};

    auto embed = [](double a, double b, double c, double dd) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
        m(1, 1) = a; m(1, 2) = b; m(2, 1) = c; m(2, 2) = dd;
        return GroupElement{m};
    };
    // a shear and a rotation of the lower-right SL_2 block; their conjugates of
    // the block's lower weight vector, together with the vector itself, span
    // the block, and their action on the first-column subspace is transversal
    GroupElement g1 = embed(1.0, 1.0, 0.0, 1.0);
    GroupElement g2 = embed(0.0, -1.0, 1.0, 0.0);
    return {g0, g1, g2};
}

}  // namespace fraclat
