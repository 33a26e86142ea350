#pragma once

// Per-module smoke fixtures with exactly known outcomes (no Monte Carlo
// tolerances beyond determinism). The CLI exposes them through --selftest;
// the full test suite covers the statistical and oracle-backed cases.

#include <cmath>
#include <sstream>
#include <vector>

#include "fraclat/dioph.hpp"
#include "fraclat/experiment.hpp"
#include "fraclat/homspace.hpp"
#include "fraclat/ifs.hpp"
#include "fraclat/liegeom.hpp"
#include "fraclat/walk.hpp"

namespace fraclat {

namespace detail {

inline void check(std::vector<Assertion>& out, const std::string& name, bool pass,
                  const std::string& detail_text = "") {
    out.push_back({name, pass, detail_text});
}

inline bool near(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

}  // namespace detail

inline std::vector<Assertion> selftest_ifs() {
    using detail::check;
    using detail::near;
    std::vector<Assertion> out;
    const IFSModel cantor = ifs_preset("cantor3");

    check(out, "ifs.depth0_is_origin", sample_sigma_n(cantor, 0, 1).point.norm() == 0.0);

    const Eigen::VectorXd composed = compose_path(cantor, {1, 0});  // b=2/3 outermost, then b=0
    check(out, "ifs.path_composition", near(composed[0], 2.0 / 3.0));

    const auto a = sample_sigma_n(cantor, 25, 77);
    const auto b = sample_sigma_n(cantor, 25, 77);
    check(out, "ifs.seed_determinism", a.point == b.point && a.seed_path == b.seed_path);

    check(out, "ifs.lyapunov_cantor3", near(cantor.lyapunov_exponent(), std::log(3.0)));
    const IFSModel halves(1,
        {{0.5, Similarity::scalar(1, 0.5, 0.0)}, {0.5, Similarity::scalar(1, 0.25, 0.0)}},
        "halves");
    check(out, "ifs.lyapunov_formula", near(halves.lyapunov_exponent(), 1.5 * std::log(2.0)));
    bool rejected = false;
    try {
        IFSModel bad(1, {{0.5, Similarity::scalar(1, 2.0, 0.0)},
                         {0.5, Similarity::scalar(1, 0.5, 0.0)}}, "bad");
    } catch (const std::invalid_argument&) {
        rejected = true;
    }
    check(out, "ifs.rejects_non_contracting", rejected);

    check(out, "ifs.moment_depth0", empirical_moment(cantor, 1.0, 0, 100, 3).mean == 0.0);

    const auto sat = affine_nonconcentration(
        cantor, AffineSubspace{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 0)},
        {100.0}, 20, 200, 5);
    check(out, "ifs.affine_saturation", sat[0].second == 1.0);

    Polynomial constant;
    constant.dim = 1;
    constant.terms = {{{0}, 1.0}};
    const auto pm = polynomial_nonconcentration(cantor, constant, {0.5, 2.0}, 10, 100, 6);
    check(out, "ifs.poly_constant", pm[0].second == 0.0 && pm[1].second == 1.0);
    return out;
}

inline std::vector<Assertion> selftest_homspace() {
    using detail::check;
    using detail::near;
    std::vector<Assertion> out;

    const auto a9 = make_a(9.0, 1);
    check(out, "homspace.make_a_d1", near(a9.mat(0, 0), 3.0) && near(a9.mat(1, 1), 1.0 / 3.0));
    check(out, "homspace.make_a_identity",
          (make_a(1.0, 2).mat - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
    const auto a8 = make_a(8.0, 2);
    check(out, "homspace.make_a_d2",
          near(a8.mat(0, 0), 2.0, 1e-12) && near(a8.mat(1, 1), 2.0, 1e-12) &&
          near(a8.mat(2, 2), 0.25, 1e-12));

    Eigen::VectorXd s1(1), s2(1);
    s1 << 0.37;
    s2 << -1.21;
    check(out, "homspace.make_u_zero",
          (make_u(Eigen::VectorXd::Zero(2)).mat - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
    const Eigen::MatrixXd uu = make_u(s1).mat * make_u(s2).mat;
    check(out, "homspace.u_group_law",
          (uu - make_u(s1 + s2).mat).cwiseAbs().maxCoeff() <= 1e-14);

    Eigen::VectorXd sth(1), pth(1);
    sth << 1.0 / 3.0;
    pth << 1.0;
    const auto dv = dani_vector(9.0, sth, pth, 3.0);
    check(out, "homspace.dani_exact", dv[0] == 0.0 && near(dv[1], 1.0));
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(2);
    e1[0] = 1.0;
    const auto dq0 = dani_vector(16.0, Eigen::VectorXd::Zero(2), e1, 0.0);
    check(out, "homspace.dani_q0", near(dq0[0], -std::pow(16.0, 1.0 / 3.0), 1e-12) &&
                                       dq0[1] == 0.0 && dq0[2] == 0.0);

    const auto red = lll_reduce(LatticeBasis::standard(1));
    check(out, "homspace.lll_identity",
          (red.basis.columns - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
    Eigen::MatrixXd sheared(2, 2);
    sheared << 1e6, 0.3e6, 0.0, 1e-6;
    const auto redsh = lll_reduce(LatticeBasis(sheared));
    Eigen::MatrixXd recon = redsh.basis.columns * redsh.inverse_transform.cast<double>();
    check(out, "homspace.lll_bookkeeping",
          (recon - sheared).norm() <= 1e-9 * sheared.norm());

    check(out, "homspace.shortest_std", near(lambda1(LatticeBasis::standard(1)), 1.0));
    check(out, "homspace.shortest_diag",
          near(lambda1(LatticeBasis::from_group(make_a(16.0, 1))), 0.25));

    const Box box25 = Box::closed((Eigen::VectorXd(2) << 0, 0).finished(),
                                  (Eigen::VectorXd(2) << 2.5, 2.5).finished());
    const auto pts = enumerate_in_box(LatticeBasis::standard(1), box25);
    check(out, "homspace.enumerate_grid", pts.size() == 9);
    check(out, "homspace.siegel_grid", siegel_transform(LatticeBasis::standard(1), box25) == 8);
    check(out, "homspace.restricted_sentinel",
          restricted_siegel_transform(LatticeBasis::standard(1), box25, kGcdUnrestricted) == 8);
    check(out, "homspace.restricted_monotone",
          restricted_siegel_transform(LatticeBasis::standard(1), box25, 1) <=
              restricted_siegel_transform(LatticeBasis::standard(1), box25, 2));

    bool grid_identity = true;
    for (int d = 1; d <= 2 && grid_identity; ++d) {
        const int N = 2;
        Eigen::VectorXd lo = Eigen::VectorXd::Zero(d + 1);
        Eigen::VectorXd hi = Eigen::VectorXd::Constant(d + 1, N + 0.5);
        const auto cnt = siegel_transform(LatticeBasis::standard(d), Box::closed(lo, hi));
        grid_identity = cnt == static_cast<std::uint64_t>(std::pow(N + 1, d + 1)) - 1;
    }
    check(out, "homspace.siegel_grid_identity", grid_identity);

    check(out, "homspace.c1", near(c_m(1), 6.0 / (std::numbers::pi * std::numbers::pi)));
    check(out, "homspace.cm_limit", std::abs(c_m(2'000'000) - 1.0) < 1e-6);
    return out;
}

inline std::vector<Assertion> selftest_walk() {
    using detail::check;
    using detail::near;
    std::vector<Assertion> out;
    const IFSModel cantor = ifs_preset("cantor3");

    const auto m0 = mu_element(Similarity::scalar(1, 1.0 / 3.0, 0.0));
    check(out, "walk.mu_pure_scaling",
          near(m0.mat(0, 0), std::sqrt(3.0)) && near(m0.mat(1, 1), 1.0 / std::sqrt(3.0)) &&
              m0.mat(0, 1) == 0.0);
    const auto m1 = mu_element(Similarity::scalar(1, 1.0 / 3.0, 2.0 / 3.0));
    const Eigen::MatrixXd expect =
        make_a(3.0, 1).mat * make_u((Eigen::VectorXd(1) << 2.0 / 3.0).finished()).mat;
    check(out, "walk.mu_formula", (m1.mat - expect).cwiseAbs().maxCoeff() <= 1e-14);
    const auto mid = mu_element(Similarity::scalar(2, 1.0, 0.0));
    check(out, "walk.mu_identity",
          (mid.mat - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-14);

    Rng rng(4);
    WalkState st = WalkState::at_identity(1);
    st.basis = LatticeBasis(m0.mat * st.basis.columns);
    check(out, "walk.one_step_lambda1", near(lambda1(st.basis), 1.0 / std::sqrt(3.0), 1e-12));

    const auto e1 = run_walk_ensemble(cantor, LatticeBasis::standard(1), 12, 16, 99);
    const auto e2 = run_walk_ensemble(cantor, LatticeBasis::standard(1), 12, 16, 99);
    check(out, "walk.seed_determinism", e1.lambda1 == e2.lambda1);

    // composing steps equals multiplying by the product matrix; a gently
    // conditioned model keeps the raw 50-step product representable in f64
    {
        const IFSModel gentle(1,
            {{0.5, Similarity::scalar(1, 0.8, 0.2)}, {0.5, Similarity::scalar(1, 1.1, -0.3)}},
            "gentle");
        Rng r2(11);
        WalkState ws = WalkState::at_identity(1);
        Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(2, 2);
        Rng r3(11);
        for (int i = 0; i < 50; ++i) {
            const auto idx = gentle.pick(r3);
            prod = mu_element(gentle.maps()[idx].map).mat * prod;
            ws = walk_step(std::move(ws), gentle, r2);
        }
        const double l_direct = lambda1(LatticeBasis(prod));
        const double l_walk = lambda1(ws.basis);
        check(out, "walk.associativity",
              std::abs(l_direct - l_walk) <= 1e-8 * std::max(1.0, std::abs(l_direct)));
    }

    Eigen::VectorXd z1 = Eigen::VectorXd::Zero(1);
    const Similarity linear(0.4, Eigen::MatrixXd::Identity(1, 1), z1);
    check(out, "walk.cocycle_linear", cocycle_identity_check(linear, 2.5, z1, 1e-10));
    {
        // a perturbed left side must fail at the same tolerance
        const Similarity sim = Similarity::scalar(1, 1.0 / 3.0, 2.0 / 3.0);
        Eigen::VectorXd sv(1);
        sv << 0.7;
        const double t = 1.7;
        Eigen::MatrixXd k = Eigen::MatrixXd::Identity(2, 2);
        Eigen::MatrixXd lhs =
            k * make_a(t * sim.ratio, 1).mat * make_u(sv).mat * mu_element(sim).mat;
        lhs(0, 0) += 1e-6;
        const Eigen::MatrixXd rhs = make_a(t, 1).mat * make_u(sim.apply(sv)).mat;
        check(out, "walk.cocycle_sensitivity", (lhs - rhs).cwiseAbs().maxCoeff() > 1e-10);
    }

    // lambda1 <= Hermite bound (4/3)^{1/4} in dimension 2, so rho at the bound
    // captures every trajectory
    const auto rec = recurrence_profile(cantor, LatticeBasis::standard(1), 6,
                                        {std::sqrt(2.0 / std::sqrt(3.0))}, 64, 21);
    check(out, "walk.recurrence_saturation", rec[0].second == 1.0);

    const auto bm = ball_mass_profile(cantor, LatticeBasis::standard(1), 0, 0.5,
                                      {LatticeBasis::standard(1)}, 16, 3);
    check(out, "walk.ball_mass_self", bm[0] == 1.0);
    return out;
}

inline std::vector<Assertion> selftest_liegeom() {
    using detail::check;
    using detail::near;
    std::vector<Assertion> out;

    const auto ws1 = weight_spaces(1);
    check(out, "liegeom.dims_d1",
          ws1.g_minus.dim() == 1 && ws1.g_zero.dim() == 1 && ws1.g_plus.dim() == 1);
    const auto ws2 = weight_spaces(2);
    check(out, "liegeom.dims_d2",
          ws2.g_minus.dim() == 2 && ws2.g_zero.dim() == 4 && ws2.g_plus.dim() == 2);
    Eigen::MatrixXd gram_mz = ws2.g_minus.basis.transpose() * ws2.g_zero.basis;
    Eigen::MatrixXd gram_mp = ws2.g_minus.basis.transpose() * ws2.g_plus.basis;
    Eigen::MatrixXd gram_zp = ws2.g_zero.basis.transpose() * ws2.g_plus.basis;
    check(out, "liegeom.orthogonality",
          gram_mz.cwiseAbs().maxCoeff() <= 1e-14 && gram_mp.cwiseAbs().maxCoeff() <= 1e-14 &&
              gram_zp.cwiseAbs().maxCoeff() <= 1e-14);

    GroupElement id2{Eigen::MatrixXd::Identity(3, 3)};
    const Eigen::MatrixXd v = elementary(3, 2, 0) - elementary(3, 0, 2);
    check(out, "liegeom.adjoint_identity", (adjoint_action(id2, v) - v).norm() == 0.0);

    const Similarity flat(0.5, Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2));
    const Subspace v1 = V1_of(flat);
    check(out, "liegeom.V1_at_zero",
          v1.dim() == 2 && wedge_norm({v1, weight_spaces(2).g_plus, weight_spaces(2).g_zero}) > 0.99);
    const Similarity shifted(0.5, Eigen::MatrixXd::Identity(2, 2),
                             (Eigen::VectorXd(2) << 0.3, -0.4).finished());
    check(out, "liegeom.V_dims", V1_of(shifted).dim() == 2 && V2_of(shifted).dim() == 6);

    // two lines in the plane at angle theta
    {
        Eigen::MatrixXd l1 = Eigen::MatrixXd::Zero(2, 1), l2 = Eigen::MatrixXd::Zero(2, 1);
        const double theta = 0.73;
        l1(0, 0) = 1.0;
        l2(0, 0) = std::cos(theta);
        l2(1, 0) = std::sin(theta);
        const double w = wedge_norm({Subspace(l1), Subspace(l2)});
        check(out, "liegeom.wedge_angle", near(w, std::abs(std::sin(theta)), 1e-12));
        Eigen::MatrixXd l3 = Eigen::MatrixXd::Zero(2, 1);
        l3(1, 0) = 1.0;
        check(out, "liegeom.wedge_orthogonal", near(wedge_norm({Subspace(l1), Subspace(l3)}), 1.0));
    }

    const auto st1 = enumerate_staircases(1);
    check(out, "liegeom.staircases_d1",
          st1.size() == 2 && st1[0].pairs.empty() && st1[1].pairs == std::set<std::pair<int, int>>{{1, 2}});
    bool stable_all = true;
    for (int d = 1; d <= 3; ++d)
        for (const auto& s : enumerate_staircases(d))
            stable_all = stable_all && s.stable(d);
    check(out, "liegeom.staircases_stable", stable_all);

    check(out, "liegeom.obstruction_identity", obstruction_check(2, id2) == 1);

    bool precondition_rejected = false;
    try {
        find_transversal_witness(2, enumerate_staircases(2)[1].subspace(2),
                                 WitnessMode::General, 1, 10);
    } catch (const std::invalid_argument&) {
        precondition_rejected = true;
    }
    check(out, "liegeom.witness_dim_precondition", precondition_rejected);

    // W inside a V1 realization: the wedge vanishes, so every CDF bin is full
    {
        const IFSModel cantor = ifs_preset("cantor3");
        Rng rng(8);
        const Eigen::VectorXd b = sample_point(cantor, 20, rng);
        const Subspace w_inside = V1_of_translation(b);
        // redraws share the same translation, fractions must be 1 at any r:
        std::vector<Subspace> fam = {w_inside, w_inside};
        check(out, "liegeom.degenerate_wedge", wedge_norm(fam) <= 1e-12);
    }
    return out;
}

inline std::vector<Assertion> selftest_dioph() {
    using detail::check;
    using detail::near;
    std::vector<Assertion> out;

    Eigen::VectorXd half(1), zero(1);
    half << 0.5;
    zero << 0.0;
    const auto psi04 = ApproxFunction::table({0.4});
    const auto psi0 = ApproxFunction::table({0.0});

    check(out, "dioph.two_sided_half", count_two_sided(half, psi04, 10) == 5);
    check(out, "dioph.one_sided_half", count_one_sided(half, psi04, 10) == 5);
    check(out, "dioph.primitive_half", count_primitive(half, psi04, 10) == 1);
    check(out, "dioph.psi_zero", count_two_sided(half, psi0, 10) == 0);
    check(out, "dioph.s_zero", count_one_sided(zero, psi04, 10) == 10);
    check(out, "dioph.s_zero_primitive", count_primitive(zero, psi04, 10) == 1);
    check(out, "dioph.primitive_le_one_sided",
          count_primitive(half, psi04, 10) <= count_one_sided(half, psi04, 10));

    check(out, "dioph.block_half", block_count(half, psi04, 2.0, 1) == 1);

    // blocks underestimate the running count (monotone psi)
    {
        Eigen::VectorXd s(1);
        s << 0.41421356237309515;
        const auto psi = ApproxFunction::power(1.0, 0.5);
        std::int64_t blocks = 0;
        for (int k = 1; k <= 8; ++k) blocks += block_count(s, psi, 2.0, k);
        check(out, "dioph.blocks_bound_count", blocks <= count_one_sided(s, psi, 256));
    }

    // empty q-window
    check(out, "dioph.empty_window", [] {
        const auto w = block_window(1.1, 2);  // (1.1, 1.21]: no integers
        return w.first > w.second;
    }() && block_count(half, psi04, 1.1, 2) == 0);

    // schedule invariants
    {
        const auto psi = ApproxFunction::power(1.0, 0.5);
        BlockSchedule sched(2.0, 1);
        bool ok = true;
        for (int k = 1; k <= 40; ++k) {
            const double tk = sched.t_k(psi, k);
            if (tk > 1e12) break;
            const double rk = sched.r_k(psi, k);
            const double pk = sched.psi_at_block(psi, k);
            const double tau_k = std::pow(2.0, k);
            ok = ok && std::abs(std::pow(pk, 1) * tau_k - std::pow(rk, 2)) <=
                           1e-12 * std::pow(rk, 2);
            ok = ok && std::abs(tau_k / pk - tk) <= 1e-12 * tk;
        }
        check(out, "dioph.schedule_invariants", ok);
    }

    // extension flags
    {
        auto psi = ApproxFunction::power(1.0, 1.0, PsiExtension::Ceil);
        check(out, "dioph.extension_ceil", near(psi.at_real(2.5), 1.0 / 3.0));
        psi.set_extension(PsiExtension::Floor);
        check(out, "dioph.extension_floor", near(psi.at_real(2.5), 0.5));
    }

    check(out, "dioph.monotone_in_N",
          count_one_sided(half, psi04, 20) >= count_one_sided(half, psi04, 10));

    bool refused = false;
    try {
        count_two_sided(half, ApproxFunction::table({11.0}), 5);
    } catch (const std::domain_error&) {
        refused = true;
    }
    check(out, "dioph.psi_refusal", refused);
    return out;
}

inline std::vector<Assertion> selftest_all() {
    std::vector<Assertion> out;
    for (auto fn : {selftest_ifs, selftest_homspace, selftest_walk, selftest_liegeom,
                    selftest_dioph}) {
        auto part = fn();
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

inline std::vector<Assertion> selftest_for(const std::string& subcommand) {
    if (subcommand == "sample" || subcommand == "nonconc") return selftest_ifs();
    if (subcommand == "haar-siegel") return selftest_homspace();
    if (subcommand == "walk" || subcommand == "recurrence" || subcommand == "ball-mass" ||
        subcommand == "equidist" || subcommand == "double-corr")
        return selftest_walk();
    if (subcommand == "mnc" || subcommand == "obstruction" || subcommand == "witness" ||
        subcommand == "staircases")
        return selftest_liegeom();
    if (subcommand == "count" || subcommand == "dani-check") return selftest_dioph();
    return selftest_all();
}

}  // namespace fraclat
