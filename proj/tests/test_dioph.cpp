#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fraclat/dioph.hpp"
#include "fraclat/stats.hpp"

using namespace fraclat;

namespace {
Eigen::VectorXd v1(double x) { return (Eigen::VectorXd(1) << x).finished(); }
}  // namespace

TEST_CASE("approximation functions", "[dioph]") {
    const auto p = ApproxFunction::power(1.0, 0.5);
    REQUIRE(p.at_integer(4) == Catch::Approx(0.5));
    REQUIRE(p.at_real(3.5) == Catch::Approx(0.5));  // ceil extension
    auto pf = ApproxFunction::power(1.0, 0.5, PsiExtension::Floor);
    REQUIRE(pf.at_real(4.5) == Catch::Approx(0.5));  // floor extension

    // power-log stays finite and non-increasing at q = 1
    const auto pl = ApproxFunction::power_log(1.0, 0.5, 1.0);
    REQUIRE(std::isfinite(pl.at_integer(1)));
    REQUIRE(pl.at_integer(1) >= pl.at_integer(2));

    REQUIRE_THROWS_AS(ApproxFunction::table({0.1, 0.5}), std::invalid_argument);  // increasing
    REQUIRE_THROWS_AS(ApproxFunction::table({}), std::invalid_argument);
    REQUIRE_THROWS_AS(p.at_integer(0), std::invalid_argument);

    const auto sums = p.partial_sums_pow_d({10, 100}, 1);
    double direct = 0.0;
    for (int q = 1; q <= 10; ++q) direct += 1.0 / std::sqrt(q);
    REQUIRE(sums[0] == Catch::Approx(direct).epsilon(1e-12));
    REQUIRE(sums[1] > sums[0]);
}

TEST_CASE("count fixtures by hand enumeration", "[dioph]") {
    const auto psi04 = ApproxFunction::table({0.4});
    REQUIRE(count_two_sided(v1(0.5), psi04, 10) == 5);
    REQUIRE(count_one_sided(v1(0.5), psi04, 10) == 5);
    REQUIRE(count_primitive(v1(0.5), psi04, 10) == 1);  // only (p,q) = (1,2)

    REQUIRE(count_two_sided(v1(0.5), ApproxFunction::table({0.0}), 10) == 0);
    REQUIRE(count_one_sided(v1(0.0), psi04, 10) == 10);
    REQUIRE(count_two_sided(v1(0.0), psi04, 10) == 10);
    REQUIRE(count_primitive(v1(0.0), psi04, 10) == 1);  // gcd(0, q) = q

    // integer coordinates: p = q s qualifies for every q
    REQUIRE(count_one_sided(v1(3.0), psi04, 7) == 7);

    REQUIRE(count_primitive(v1(0.5), psi04, 10) <= count_one_sided(v1(0.5), psi04, 10));
    REQUIRE(count_one_sided(v1(0.5), psi04, 20) >= count_one_sided(v1(0.5), psi04, 10));

    REQUIRE_THROWS_AS(count_two_sided(v1(0.5), ApproxFunction::table({11.0}), 5),
                      std::domain_error);

    // d = 2 sanity: windows multiply across coordinates
    Eigen::VectorXd s2(2);
    s2 << 0.5, 0.0;
    REQUIRE(count_one_sided(s2, psi04, 10) == 5);  // first coordinate keeps even q only
}

TEST_CASE("two-sided to one-sided ensemble ratio is about 2^d", "[dioph]") {
    const IFSModel cantor = ifs_preset("cantor3");
    const auto psi = ApproxFunction::power(1.0, 0.5);
    double tot2 = 0.0, tot1 = 0.0;
    for (std::uint64_t i = 0; i < 40; ++i) {
        Rng rng(seed_for_item(555, i));
        const Eigen::VectorXd s = sample_point(cantor, 37, rng);
        tot2 += static_cast<double>(count_two_sided(s, psi, 100000));
        tot1 += static_cast<double>(count_one_sided(s, psi, 100000));
    }
    REQUIRE(tot2 / tot1 == Catch::Approx(2.0).margin(0.2));
}

TEST_CASE("block counts and the schedule", "[dioph]") {
    const auto psi04 = ApproxFunction::table({0.4});
    REQUIRE(block_count(v1(0.5), psi04, 2.0, 1) == 1);

    // empty q-window
    const auto w = block_window(1.1, 2);
    REQUIRE(w.first > w.second);
    REQUIRE(block_count(v1(0.5), psi04, 1.1, 2) == 0);

    // sum of blocks is dominated by the running count (monotone psi)
    const auto psi = ApproxFunction::power(1.0, 0.5);
    const Eigen::VectorXd s = v1(std::sqrt(2.0) - 1.0);
    std::int64_t blocks = 0;
    for (int k = 1; k <= 10; ++k) blocks += block_count(s, psi, 2.0, k);
    REQUIRE(blocks <= count_one_sided(s, psi, 1024));

    BlockSchedule sched(2.0, 1);
    for (int k = 1; k <= 40; ++k) {
        const double tk = sched.t_k(psi, k);
        if (tk > 1e12) break;
        const double rk = sched.r_k(psi, k);
        const double pk = sched.psi_at_block(psi, k);
        const double tau_k = std::pow(2.0, k);
        REQUIRE(std::abs(pk * tau_k - rk * rk) <= 1e-12 * rk * rk);
        REQUIRE(std::abs(tau_k / pk - tk) <= 1e-12 * tk);
    }
    REQUIRE_THROWS_AS(BlockSchedule(3.0, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(BlockSchedule(1.0, 1), std::invalid_argument);
}

TEST_CASE("dani cross-check: random instances and boundary fixtures", "[dioph]") {
    const IFSModel cantor = ifs_preset("cantor3");
    const IFSModel power2 = ifs_preset("cantor3-power-d2");

    for (int trial = 0; trial < 40; ++trial) {
        Rng rng(seed_for_item(808, static_cast<std::uint64_t>(trial)));
        const bool use_d2 = trial % 2 == 1;
        const IFSModel& model = use_d2 ? power2 : cantor;
        const double a = trial % 4 < 2 ? 0.5 : 0.25;
        const auto psi = ApproxFunction::power(rng.uniform(0.5, 1.5), a);
        const Eigen::VectorXd s = sample_point(model, 37, rng);
        const int k = 1 + static_cast<int>(rng.below(use_d2 ? 12 : 20));
        const auto res = dani_cross_check(s, psi, 2.0, k);
        INFO("trial " << trial << " k=" << k << " direct=" << res.direct
                      << " lattice=" << res.lattice);
        REQUIRE(res.equal);
    }

    // rational coordinates with small denominators: ties identical on both routes
    const auto psi = ApproxFunction::power(1.0, 0.5);
    for (double sv : {0.5, 1.0 / 3.0, 0.25, 2.0 / 3.0}) {
        for (int k = 1; k <= 14; ++k) {
            const auto res = dani_cross_check(v1(sv), psi, 2.0, k);
            REQUIRE(res.equal);
        }
        for (int k = 1; k <= 14; ++k) {
            const auto res = dani_cross_check(v1(sv), psi, 1.5, k);
            REQUIRE(res.equal);
        }
    }

    // psi(tau^k) >= 1: the box widens but the identity is unchanged
    const auto wide = ApproxFunction::table({1.3});
    for (int k = 1; k <= 10; ++k) {
        const auto res = dani_cross_check(v1(std::sqrt(2.0) - 1.0), wide, 2.0, k);
        REQUIRE(res.equal);
    }
}

TEST_CASE("kb volume route: estimate brackets the direct count", "[dioph]") {
    // wide constant psi puts blocks in the big-box regime quickly
    const auto wide = ApproxFunction::table({2.0});
    const Eigen::VectorXd s = v1(std::sqrt(2.0) - 1.0);

    for (int k : {10, 12, 19}) {
        const auto est = kb_volume_estimate(s, wide, 2.0, k);
        REQUIRE(est.precondition_ok);
        const double direct = static_cast<double>(block_count(s, wide, 2.0, k));
        REQUIRE(std::abs(direct - est.volume) <= est.error_bound * (1.0 + 1e-9));
    }

    // with the default gamma1 = 0.01, a wide block is flagged Kb
    REQUIRE(block_is_kb(wide, 2.0, 19, 1));
    // blocks at the convergence boundary psi(q) ~ 1/q have r_k ~ 1 and are Ks
    const auto thin = ApproxFunction::power(1.0, 1.0);
    REQUIRE_FALSE(block_is_kb(thin, 2.0, 10, 1));

    // d = 2 volume route
    Eigen::VectorXd s2(2);
    s2 << std::sqrt(2.0) - 1.0, std::sqrt(3.0) - 1.0;
    for (int k : {8, 10}) {
        const auto est = kb_volume_estimate(s2, wide, 2.0, k);
        REQUIRE(est.precondition_ok);
        const double direct = static_cast<double>(block_count(s2, wide, 2.0, k));
        REQUIRE(std::abs(direct - est.volume) <= est.error_bound * (1.0 + 1e-9));
    }
}

TEST_CASE("zeta values", "[dioph]") {
    REQUIRE(zeta_int(2) == Catch::Approx(std::numbers::pi * std::numbers::pi / 6.0));
    REQUIRE(zeta_int(3) == Catch::Approx(1.2020569031595942854).epsilon(1e-12));
    REQUIRE(zeta_int(4) == Catch::Approx(std::pow(std::numbers::pi, 4) / 90.0).epsilon(1e-12));
}

TEST_CASE("schmidt experiment: divergent ratios and the Lebesgue control", "[dioph]") {
    const IFSModel cantor = ifs_preset("cantor3");
    const auto psi = ApproxFunction::power(1.0, 0.5);

    const auto recs = schmidt_ratio_experiment(cantor, psi, {100000}, 20, 616);
    REQUIRE(recs.size() == 20);
    std::vector<double> r1, r2, rp;
    for (const auto& r : recs) {
        REQUIRE(r.primitive <= r.one_sided);
        REQUIRE(r.one_sided <= r.two_sided);
        r1.push_back(r.ratio1);
        r2.push_back(r.ratio2);
        rp.push_back(r.ratioP);
    }
    REQUIRE(median(r1) == Catch::Approx(1.0).margin(0.15));
    REQUIRE(median(r2) == Catch::Approx(1.0).margin(0.15));
    REQUIRE(median(rp) == Catch::Approx(1.0).margin(0.15));

    // reproducibility: identical seeds give identical records
    const auto again = schmidt_ratio_experiment(cantor, psi, {100000}, 20, 616);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        REQUIRE(recs[i].one_sided == again[i].one_sided);
        REQUIRE(recs[i].two_sided == again[i].two_sided);
        REQUIRE(recs[i].primitive == again[i].primitive);
    }

    // Lebesgue control group: one-sided ratio near 1 for uniform points
    {
        double sum_psi = psi.partial_sums_pow_d({100000}, 1)[0];
        std::vector<double> ratios;
        for (std::uint64_t i = 0; i < 20; ++i) {
            Rng rng(seed_for_item(999, i));
            const double s = rng.uniform01();
            ratios.push_back(static_cast<double>(count_one_sided(v1(s), psi, 100000)) / sum_psi);
        }
        REQUIRE(median(ratios) == Catch::Approx(1.0).margin(0.15));
    }

    // convergent psi: refused by the divergence precondition
    REQUIRE_THROWS_AS(
        schmidt_ratio_experiment(cantor, ApproxFunction::power(1.0, 2.0), {100000}, 5, 1),
        std::domain_error);
}

TEST_CASE("convergent case: counts freeze between checkpoints", "[dioph]") {
    const IFSModel cantor = ifs_preset("cantor3");
    const auto psi = ApproxFunction::power(1.0, 2.0);
    int frozen = 0;
    const int samples = 25;
    for (int i = 0; i < samples; ++i) {
        Rng rng(seed_for_item(313, static_cast<std::uint64_t>(i)));
        const Eigen::VectorXd s = sample_point(cantor, 37, rng);
        const auto at_small = count_one_sided(s, psi, 10000);
        const auto at_large = count_one_sided(s, psi, 100000);
        frozen += at_small == at_large;
    }
    REQUIRE(frozen >= samples * 8 / 10);
}
