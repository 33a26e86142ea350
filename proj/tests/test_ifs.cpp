#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fraclat/ifs.hpp"
#include "fraclat/stats.hpp"

using namespace fraclat;

namespace {

// Exact CDF of the middle-thirds Cantor measure, by digit recursion. Test-side
// oracle, independent of the sampling code.
double cantor_cdf(double x, int depth = 64) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    if (depth == 0) return 0.5;
    if (x < 1.0 / 3.0) return 0.5 * cantor_cdf(3.0 * x, depth - 1);
    if (x < 2.0 / 3.0) return 0.5;
    return 0.5 + 0.5 * cantor_cdf(3.0 * x - 2.0, depth - 1);
}

}  // namespace

TEST_CASE("similarity validation", "[ifs]") {
    const Eigen::MatrixXd I2 = Eigen::MatrixXd::Identity(2, 2);
    REQUIRE_NOTHROW(Similarity(0.5, I2, Eigen::VectorXd::Zero(2)));
    REQUIRE_THROWS_AS(Similarity(-0.5, I2, Eigen::VectorXd::Zero(2)), std::invalid_argument);
    Eigen::MatrixXd skew(2, 2);
    skew << 1, 0.1, 0, 1;
    REQUIRE_THROWS_AS(Similarity(0.5, skew, Eigen::VectorXd::Zero(2)), std::invalid_argument);
    Eigen::MatrixXd reflect(2, 2);
    reflect << 1, 0, 0, -1;  // orthogonal but orientation reversing
    REQUIRE_THROWS_AS(Similarity(0.5, reflect, Eigen::VectorXd::Zero(2)), std::invalid_argument);
}

TEST_CASE("model validation and lyapunov exponents", "[ifs]") {
    const IFSModel cantor = ifs_preset("cantor3");
    REQUIRE(cantor.lyapunov_exponent() == Catch::Approx(std::log(3.0)).epsilon(1e-14));

    const IFSModel halves(1,
        {{0.5, Similarity::scalar(1, 0.5, 0.0)}, {0.5, Similarity::scalar(1, 0.25, 0.0)}},
        "halves");
    REQUIRE(halves.lyapunov_exponent() == Catch::Approx(1.5 * std::log(2.0)).epsilon(1e-14));

    // drift exactly zero: not contracting in average
    REQUIRE_THROWS_AS(
        IFSModel(1, {{0.5, Similarity::scalar(1, 2.0, 0.0)},
                     {0.5, Similarity::scalar(1, 0.5, 0.0)}}, "marginal"),
        std::invalid_argument);
    REQUIRE_THROWS_AS(
        IFSModel(1, {{0.6, Similarity::scalar(1, 0.5, 0.0)},
                     {0.6, Similarity::scalar(1, 0.5, 0.5)}}, "weights"),
        std::invalid_argument);

    // every preset constructs (contraction asserted inside)
    for (const auto& info : preset_catalog()) {
        if (info.takes_parameter) {
            REQUIRE_NOTHROW(ifs_preset(info.name, 0.6));
        } else {
            REQUIRE_NOTHROW(ifs_preset(info.name));
        }
    }
    REQUIRE(ifs_preset("sierpinski-triangle").dimension() == 2);
}

TEST_CASE("sampling fixtures and determinism", "[ifs]") {
    const IFSModel cantor = ifs_preset("cantor3");

    REQUIRE(sample_sigma_n(cantor, 0, 5).point[0] == 0.0);

    // maps index 1 (b=2/3) outermost, then index 0 (b=0): value 2/3
    REQUIRE(compose_path(cantor, {1, 0})[0] == Catch::Approx(2.0 / 3.0).epsilon(1e-15));

    const auto a = sample_sigma_n(cantor, 30, 99);
    const auto b = sample_sigma_n(cantor, 30, 99);
    REQUIRE(a.point == b.point);
    REQUIRE(a.seed_path == b.seed_path);

    // recomputation from the stored path
    const Eigen::VectorXd redo = compose_path(cantor, a.seed_path);
    REQUIRE((a.point - redo).norm() <= 1e-9 * std::max(1.0, a.point.norm()));
}

TEST_CASE("empirical moment matches the symmetric mean of the Cantor measure", "[ifs]") {
    const IFSModel cantor = ifs_preset("cantor3");
    // the two maps are symmetric around 1/2, so the exact mean is 1/2
    const auto est = empirical_moment(cantor, 1.0, 40, 100000, 11);
    REQUIRE(std::abs(est.mean - 0.5) <= 3.0 * est.se);

    REQUIRE(empirical_moment(cantor, 1.0, 0, 1000, 3).mean == 0.0);

    const IFSModel sier = ifs_preset("sierpinski-triangle");
    const auto s1 = empirical_moment(sier, 1.0, 40, 50000, 21);
    const auto s2 = empirical_moment(sier, 1.0, 40, 50000, 22);
    REQUIRE(std::isfinite(s1.mean));
    REQUIRE(std::abs(s1.mean - s2.mean) <= 3.0 * (s1.se + s2.se));
}

TEST_CASE("finite-time approximations stabilize exponentially", "[ifs]") {
    const IFSModel cantor = ifs_preset("cantor3");
    // paired comparison: the 2n-point shares the n-prefix, so the gap is
    // bounded by the prefix contraction 3^{-n}
    auto gap = [&](int n) {
        double acc = 0.0;
        const std::uint64_t N = 20000;
        for (std::uint64_t i = 0; i < N; ++i) {
            Rng rng(seed_for_item(1234, i));
            std::vector<std::uint32_t> path(2 * static_cast<std::size_t>(n));
            for (auto& idx : path) idx = cantor.pick(rng);
            const std::vector<std::uint32_t> prefix(path.begin(), path.begin() + n);
            const double fn = std::min(compose_path(cantor, prefix).norm(), 1.0);
            const double f2n = std::min(compose_path(cantor, path).norm(), 1.0);
            acc += std::abs(fn - f2n);
        }
        return acc / static_cast<double>(N);
    };
    const double se = 3.0 / std::sqrt(20000.0);  // crude bound on the noise scale
    double prev = 1e9;
    for (int n : {5, 10, 20, 40}) {
        const double g = gap(n);
        REQUIRE(g <= prev + 3.0 * se);
        prev = g;
    }
    REQUIRE(gap(40) <= 1e-12);
}

TEST_CASE("affine non-concentration against the cylinder oracle", "[ifs]") {
    const IFSModel cantor = ifs_preset("cantor3");
    const int n = cantor.default_depth();

    // the 0.1-neighborhood of 1/2 lies in the removed middle third
    AffineSubspace mid{(Eigen::VectorXd(1) << 0.5).finished(), Eigen::MatrixXd::Zero(1, 0)};
    REQUIRE(cantor_cdf(0.6) - cantor_cdf(0.4) == 0.0);
    const auto hole = affine_nonconcentration(cantor, mid, {0.1}, n, 50000, 31);
    REQUIRE(hole[0].second == 0.0);

    // mass of [0, 3^{-k}] is exactly 2^{-k}
    AffineSubspace origin{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 0)};
    std::vector<double> eps;
    for (int k = 2; k <= 6; ++k) eps.push_back(std::pow(3.0, -k));
    const std::uint64_t samples = 200000;
    const auto masses = affine_nonconcentration(cantor, origin, eps, n, samples, 32);
    for (int k = 2; k <= 6; ++k) {
        const double oracle = cantor_cdf(std::pow(3.0, -k));
        REQUIRE(oracle == Catch::Approx(std::pow(2.0, -k)).epsilon(1e-12));
        const double mass = masses[static_cast<std::size_t>(k - 2)].second;
        const double se = std::sqrt(oracle * (1 - oracle) / static_cast<double>(samples));
        REQUIRE(std::abs(mass - oracle) <= 4.0 * se);
    }

    // log-log slope close to log2/log3
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < masses.size(); ++i) {
        lx.push_back(std::log(masses[i].first));
        ly.push_back(std::log(masses[i].second));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double nn = static_cast<double>(lx.size());
    const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    REQUIRE(std::abs(slope - std::log(2.0) / std::log(3.0)) < 0.05);

    // saturation and exact monotonicity on a shared sample set
    const auto sat = affine_nonconcentration(cantor, origin, {0.001, 0.01, 100.0}, n, 20000, 33);
    REQUIRE(sat[2].second == 1.0);
    REQUIRE(sat[0].second <= sat[1].second);
    REQUIRE(sat[1].second <= sat[2].second);

    // full-rank direction matrix rejected
    AffineSubspace full{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)};
    REQUIRE_THROWS_AS(affine_nonconcentration(cantor, full, {0.1}, n, 10, 1),
                      std::invalid_argument);
}

TEST_CASE("polynomial non-concentration", "[ifs]") {
    const IFSModel power = ifs_preset("cantor3-power-d2");
    const int n = power.default_depth();

    // P(s1,s2) = s1 s2 - s2, already max-norm 1
    Polynomial P;
    P.dim = 2;
    P.terms = {{{1, 1}, 1.0}, {{0, 1}, -1.0}};

    const std::vector<double> eps = {1e-1, 1e-2, 1e-3};
    const auto m1 = polynomial_nonconcentration(power, P, eps, n, 100000, 41);
    const auto m2 = polynomial_nonconcentration(power, P, eps, n, 100000, 42);
    REQUIRE(m1[0].second > m1[2].second);  // mass decays as eps shrinks
    std::vector<double> xs, y1, y2;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        xs.push_back(eps[i]);
        y1.push_back(m1[i].second);
        y2.push_back(m2[i].second);
    }
    const double s1 = loglog_slope(xs, y1), s2 = loglog_slope(xs, y2);
    REQUIRE(s1 > 0.0);
    REQUIRE(s2 > 0.0);
    REQUIRE(std::abs(s1 - s2) <= 0.5 * std::max(std::abs(s1), std::abs(s2)));

    Polynomial constant;
    constant.dim = 2;
    constant.terms = {{{0, 0}, 1.0}};
    const auto c = polynomial_nonconcentration(power, constant, {0.5, 2.0}, 10, 1000, 4);
    REQUIRE(c[0].second == 0.0);
    REQUIRE(c[1].second == 1.0);

    Polynomial zero;
    zero.dim = 2;
    REQUIRE_THROWS_AS(polynomial_nonconcentration(power, zero, {0.1}, 10, 10, 1),
                      std::invalid_argument);
    Polynomial unnormalized;
    unnormalized.dim = 2;
    unnormalized.terms = {{{1, 0}, 2.0}};
    REQUIRE_THROWS_AS(polynomial_nonconcentration(power, unnormalized, {0.1}, 10, 10, 1),
                      std::invalid_argument);
}
