#pragma once

// The random walk on the space of lattices driven by an IFS: each similarity
// phi maps to the group element k_phi^{-1} a(1/r_phi) u(b_phi), applied on the
// left of the current basis. Includes the exact cocycle identity check, cusp
// recurrence and ball-mass diagnostics, and expanding-translate statistics
// against exactly known Haar means of restricted Siegel transforms.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fraclat/homspace.hpp"
#include "fraclat/ifs.hpp"
#include "fraclat/liegeom.hpp"
#include "fraclat/parallel.hpp"
#include "fraclat/rng.hpp"
#include "fraclat/stats.hpp"

namespace fraclat {

// k_phi^{-1} a(1/r_phi) u(b_phi), with k_phi = diag(O_phi, 1).
inline GroupElement mu_element(const Similarity& sim) {
    const int d = sim.dim();
    check_dim(d);
    if (std::abs(sim.rotation.determinant() - 1.0) > 1e-9)
        throw std::invalid_argument("mu_element: similarity must be orientation preserving");
    Eigen::MatrixXd k_inv = Eigen::MatrixXd::Identity(d + 1, d + 1);
    k_inv.topLeftCorner(d, d) = sim.rotation.transpose();
    GroupElement g{k_inv * make_a(1.0 / sim.ratio, d).mat * make_u(sim.translation).mat};
    if (std::abs(g.det() - 1.0) > 1e-12 * std::max(1.0, g.mat.cwiseAbs().maxCoeff()))
        g.renormalize();
    return g;
}

// Exact matrix identity k_g a(t r_g) u(s) g = a(t) u(phi_g(s)) for g the group
// element of the similarity. Failures indicate an operator-ordering bug.
inline bool cocycle_identity_check(const Similarity& sim, double t,
                                   const Eigen::VectorXd& s, double tol) {
    if (!(t > 0.0)) throw std::invalid_argument("cocycle_identity_check: t must be > 0");
    const int d = sim.dim();
    if (s.size() != d) throw std::invalid_argument("cocycle_identity_check: s has wrong size");
    Eigen::MatrixXd k = Eigen::MatrixXd::Identity(d + 1, d + 1);
    k.topLeftCorner(d, d) = sim.rotation;
    const Eigen::MatrixXd lhs = k * make_a(t * sim.ratio, d).mat * make_u(s).mat * mu_element(sim).mat;
    const Eigen::MatrixXd rhs = make_a(t, d).mat * make_u(sim.apply(s)).mat;
    return (lhs - rhs).cwiseAbs().maxCoeff() <= tol;
}

struct WalkState {
    LatticeBasis basis;
    long step_count = 0;
    double accumulated_log_r = 0.0;

    explicit WalkState(LatticeBasis b) : basis(std::move(b)) {}

    static WalkState at_identity(int d) { return WalkState(LatticeBasis::standard(d)); }
};

// One step: draw phi with the model's weights, left-multiply, re-stabilize.
inline WalkState walk_step(WalkState state, const IFSModel& model, Rng& rng) {
    const auto idx = model.pick(rng);
    const Similarity& sim = model.maps()[idx].map;
    state.basis = LatticeBasis(mu_element(sim).mat * state.basis.columns);
    state.basis.renormalize_det();
    state.basis = lll_reduce(state.basis).basis;
    state.step_count += 1;
    state.accumulated_log_r += std::log(sim.ratio);
    return state;
}

inline WalkState walk_n_steps(WalkState state, const IFSModel& model, int n, Rng& rng) {
    for (int i = 0; i < n; ++i) state = walk_step(std::move(state), model, rng);
    return state;
}

struct EnsembleStats {
    std::uint64_t ensemble = 0;
    std::uint64_t master_seed = 0;
    int n = 0;
    std::vector<double> lambda1;  // terminal shortest vector norms, one per trajectory
};

inline EnsembleStats run_walk_ensemble(const IFSModel& model, const LatticeBasis& start,
                                       int n, std::uint64_t ensemble, std::uint64_t seed) {
    if (n < 0 || ensemble < 1) throw std::invalid_argument("run_walk_ensemble: bad parameters");
    EnsembleStats stats;
    stats.ensemble = ensemble;
    stats.master_seed = seed;
    stats.n = n;
    stats.lambda1.resize(ensemble);
    parallel_chunks(ensemble, 64, [&](std::size_t, std::uint64_t b, std::uint64_t e) {
        for (std::uint64_t i = b; i < e; ++i) {
            Rng rng(seed_for_item(seed, i));
            WalkState st = walk_n_steps(WalkState(start), model, n, rng);
            stats.lambda1[i] = lambda1(st.basis);
        }
    });
    return stats;
}

// Empirical cusp-excursion fractions P(lambda_1 <= rho) at terminal time n.
inline std::vector<std::pair<double, double>> recurrence_profile(
        const IFSModel& model, const LatticeBasis& start, int n,
        const std::vector<double>& rhos, std::uint64_t ensemble, std::uint64_t seed) {
    if (n < 1 || ensemble < 1) throw std::invalid_argument("recurrence_profile: bad parameters");
    const EnsembleStats stats = run_walk_ensemble(model, start, n, ensemble, seed);
    std::vector<std::pair<double, double>> out;
    out.reserve(rhos.size());
    for (double rho : rhos) {
        std::uint64_t c = 0;
        for (double l1 : stats.lambda1)
            if (l1 <= rho) ++c;
        out.emplace_back(rho, static_cast<double>(c) / static_cast<double>(ensemble));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Basis-distance proxy. Both bases are LLL-reduced, then the Frobenius
// deviation of g_x (g_y S)^{-1} from the identity is minimized over signed
// permutations S. A comparative proxy only; not the Riemannian metric.

namespace detail {

inline void signed_permutations(int n, std::vector<Eigen::MatrixXd>& out) {
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end());
    do {
        for (int signs = 0; signs < (1 << n); ++signs) {
            Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
            for (int i = 0; i < n; ++i)
                S(perm[static_cast<std::size_t>(i)], i) = (signs >> i) & 1 ? -1.0 : 1.0;
            out.push_back(std::move(S));
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
}

}  // namespace detail

inline double basis_distance(const LatticeBasis& x, const LatticeBasis& y) {
    const LatticeBasis rx = lll_reduce(x).basis;
    const LatticeBasis ry = lll_reduce(y).basis;
    const int n = rx.n();
    std::vector<Eigen::MatrixXd> symmetries;
    detail::signed_permutations(n, symmetries);
    double best = std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    for (const auto& S : symmetries) {
        const Eigen::MatrixXd m = rx.columns * (ry.columns * S).inverse() - I;
        best = std::min(best, m.norm());
    }
    return best;
}

// Fractions of terminal lattices within distance rho of each target.
inline std::vector<double> ball_mass_profile(
        const IFSModel& model, const LatticeBasis& start, int n, double rho,
        const std::vector<LatticeBasis>& targets, std::uint64_t ensemble, std::uint64_t seed) {
    if (ensemble < 1) throw std::invalid_argument("ball_mass_profile: ensemble must be >= 1");
    std::vector<std::uint64_t> counts = mc_tally(ensemble, targets.size(),
        [&](std::uint64_t i, std::vector<std::uint64_t>& bins) {
            Rng rng(seed_for_item(seed, i));
            WalkState st = walk_n_steps(WalkState(start), model, n, rng);
            for (std::size_t t = 0; t < targets.size(); ++t)
                if (basis_distance(st.basis, targets[t]) <= rho) ++bins[t];
        }, 64);
    std::vector<double> out;
    out.reserve(targets.size());
    for (auto c : counts) out.push_back(static_cast<double>(c) / static_cast<double>(ensemble));
    return out;
}

// ---------------------------------------------------------------------------
// Expanding translates of the fractal measure

// A restricted-Siegel test statistic: the box indicator summed over lattice
// points with content <= gcd_bound. constant_one makes it the constant
// function 1 (useful to specialize pair statistics to single ones).
struct SiegelStatistic {
    Box box;
    std::uint64_t gcd_bound = kGcdUnrestricted;
    bool constant_one = false;

    static SiegelStatistic one() {
        SiegelStatistic f;
        f.constant_one = true;
        return f;
    }

    double haar_mean(int d) const {
        if (constant_one) return 1.0;
        if (d == 1) return c_m(gcd_bound) * box.volume();
        if (gcd_bound != kGcdUnrestricted)
            throw std::invalid_argument("SiegelStatistic: exact Haar mean for gcd-restricted "
                                        "statistics is only certified for d=1");
        return box.volume();
    }

    double evaluate(const LatticeBasis& basis) const {
        if (constant_one) return 1.0;
        return static_cast<double>(restricted_siegel_transform(basis, box, gcd_bound));
    }
};

// Monte Carlo mean of f(a(t) u(s) x_0) with s drawn from the n-step
// approximation of the stationary measure (or from Lebesgue on [0,1]^d, the
// classical control group).
inline MeanSE expanding_translate_statistic(const IFSModel& model, double t,
                                            const SiegelStatistic& f,
                                            std::uint64_t samples, std::uint64_t seed,
                                            int depth = -1, bool lebesgue_control = false) {
    if (!(t > 1.0)) throw std::invalid_argument("expanding_translate_statistic: t must be > 1");
    const int d = model.dimension();
    const int n = depth > 0 ? depth : model.default_depth();
    return mc_mean_se(samples, [&](std::uint64_t i) {
        Rng rng(seed_for_item(seed, i));
        Eigen::VectorXd s(d);
        if (lebesgue_control) {
            for (int k = 0; k < d; ++k) s[k] = rng.uniform01();
        } else {
            s = sample_point(model, n, rng);
        }
        const Eigen::MatrixXd basis = make_a(t, d).mat * make_u(s).mat;
        return f.evaluate(LatticeBasis(basis));
    }, 1024);
}

struct DoubleCorrelation {
    double deviation = 0.0;    // |E[f1 f2] - haar(f1) haar(f2)|
    double mean_product = 0.0;
    double se = 0.0;
    double haar_product = 0.0;
};

// Empirical |E[f1(a(t1)u(s)x0) f2(a(t2)u(s)x0)] - m(f1) m(f2)| with exact Haar
// means for the restricted statistics.
inline DoubleCorrelation double_correlation(const IFSModel& model, double t1, double t2,
                                            const SiegelStatistic& f1, const SiegelStatistic& f2,
                                            std::uint64_t samples, std::uint64_t seed,
                                            int depth = -1) {
    if (!(t1 > 1.0) || !(t2 >= t1))
        throw std::invalid_argument("double_correlation: need t2 >= t1 > 1");
    const int d = model.dimension();
    const int n = depth > 0 ? depth : model.default_depth();
    const MeanSE prod = mc_mean_se(samples, [&](std::uint64_t i) {
        Rng rng(seed_for_item(seed, i));
        const Eigen::VectorXd s = sample_point(model, n, rng);
        const Eigen::MatrixXd us = make_u(s).mat;
        const double v1 = f1.evaluate(LatticeBasis(make_a(t1, d).mat * us));
        const double v2 = f2.evaluate(LatticeBasis(make_a(t2, d).mat * us));
        return v1 * v2;
    }, 1024);
    DoubleCorrelation out;
    out.mean_product = prod.mean;
    out.se = prod.se;
    out.haar_product = f1.haar_mean(d) * f2.haar_mean(d);
    out.deviation = std::abs(prod.mean - out.haar_product);
    return out;
}

}  // namespace fraclat
