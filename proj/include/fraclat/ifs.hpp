#pragma once

// Randomized self-similar iterated function systems: weighted families of
// similarities s -> r*O*s + b of R^d, contracting in average. The stationary
// measure is realized through its finite-time approximation (n-fold pushforward
// of the Dirac mass at 0), which stabilizes exponentially fast in n.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fraclat/parallel.hpp"
#include "fraclat/rng.hpp"

namespace fraclat {

constexpr double kOrthoTol = 1e-12;
constexpr double kWeightTol = 1e-12;

// One orientation-preserving similarity of R^d.
struct Similarity {
    double ratio;                 // contraction/expansion factor, > 0
    Eigen::MatrixXd rotation;     // d x d, in SO(d)
    Eigen::VectorXd translation;  // in R^d

    Similarity(double r, Eigen::MatrixXd O, Eigen::VectorXd b)
        : ratio(r), rotation(std::move(O)), translation(std::move(b)) {
        const auto d = rotation.rows();
        if (d < 1 || rotation.cols() != d || translation.size() != d)
            throw std::invalid_argument("Similarity: inconsistent dimensions");
        if (!(ratio > 0.0)) throw std::invalid_argument("Similarity: ratio must be positive");
        const double ortho_err = (rotation.transpose() * rotation -
                                  Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
        if (ortho_err > kOrthoTol)
            throw std::invalid_argument("Similarity: rotation is not orthogonal");
        if (std::abs(rotation.determinant() - 1.0) > 1e-9)
            throw std::invalid_argument("Similarity: rotation must have determinant +1");
    }

    int dim() const { return static_cast<int>(rotation.rows()); }

    Eigen::VectorXd apply(const Eigen::VectorXd& s) const {
        return ratio * (rotation * s) + translation;
    }

    static Similarity scalar(int d, double r, double b_all) {
        return Similarity(r, Eigen::MatrixXd::Identity(d, d),
                          Eigen::VectorXd::Constant(d, b_all));
    }
};

struct WeightedMap {
    double weight;
    Similarity map;
};

class IFSModel {
public:
    IFSModel(int dimension, std::vector<WeightedMap> maps, std::string label)
        : dimension_(dimension), maps_(std::move(maps)), label_(std::move(label)) {
        if (dimension_ < 1) throw std::invalid_argument("IFSModel: dimension must be >= 1");
        if (maps_.empty()) throw std::invalid_argument("IFSModel: no maps");
        double wsum = 0.0, drift = 0.0;
        for (const auto& wm : maps_) {
            if (wm.map.dim() != dimension_)
                throw std::invalid_argument("IFSModel: map dimension mismatch");
            if (!(wm.weight > 0.0)) throw std::invalid_argument("IFSModel: weights must be positive");
            wsum += wm.weight;
            drift += wm.weight * std::log(wm.map.ratio);
        }
        if (std::abs(wsum - 1.0) > kWeightTol)
            throw std::invalid_argument("IFSModel: weights must sum to 1");
        if (!(drift < 0.0))
            throw std::invalid_argument("IFSModel: not contracting in average (sum w_i log r_i >= 0)");
        cumulative_.reserve(maps_.size());
        double acc = 0.0;
        for (const auto& wm : maps_) {
            acc += wm.weight;
            cumulative_.push_back(acc);
        }
        cumulative_.back() = 1.0;
    }

    int dimension() const { return dimension_; }
    const std::vector<WeightedMap>& maps() const { return maps_; }
    const std::string& label() const { return label_; }

    // Mean contraction rate -sum w_i log r_i; positive by construction.
    double lyapunov_exponent() const {
        double drift = 0.0;
        for (const auto& wm : maps_) drift += wm.weight * std::log(wm.map.ratio);
        return -drift;
    }

    // Depth at which the finite-time approximation is below f64 resolution for
    // Lipschitz statistics: contraction factor <= e^{-40}.
    int default_depth() const {
        return static_cast<int>(std::ceil(40.0 / lyapunov_exponent()));
    }

    std::uint32_t pick(Rng& rng) const {
        const double u = rng.uniform01();
        const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
        return static_cast<std::uint32_t>(std::min<std::size_t>(
            static_cast<std::size_t>(it - cumulative_.begin()), maps_.size() - 1));
    }

private:
    int dimension_;
    std::vector<WeightedMap> maps_;
    std::string label_;
    std::vector<double> cumulative_;
};

// A draw from the n-step approximation of the stationary measure, together
// with the word of map indices that produced it (outermost map drawn first).
struct SamplePoint {
    Eigen::VectorXd point;
    int depth;
    std::vector<std::uint32_t> seed_path;
};

// Recompute the composition phi_{i_1} o ... o phi_{i_n} (0) from a path.
inline Eigen::VectorXd compose_path(const IFSModel& model, const std::vector<std::uint32_t>& path) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(model.dimension());
    for (auto it = path.rbegin(); it != path.rend(); ++it)
        x = model.maps()[*it].map.apply(x);
    return x;
}

inline SamplePoint sample_sigma_n(const IFSModel& model, int n, std::uint64_t seed) {
    if (n < 0) throw std::invalid_argument("sample_sigma_n: n must be >= 0");
    Rng rng(seed);
    SamplePoint sp;
    sp.depth = n;
    sp.seed_path.resize(n);
    for (int k = 0; k < n; ++k) sp.seed_path[k] = model.pick(rng);
    sp.point = compose_path(model, sp.seed_path);
    return sp;
}

// Same draw without materializing the path; used inside Monte Carlo loops.
inline Eigen::VectorXd sample_point(const IFSModel& model, int n, Rng& rng) {
    std::vector<std::uint32_t> path(n);
    for (int k = 0; k < n; ++k) path[k] = model.pick(rng);
    return compose_path(model, path);
}

// Monte Carlo estimate of int ||s||^gamma dsigma^(n).
inline MeanSE empirical_moment(const IFSModel& model, double gamma, int n,
                               std::uint64_t samples, std::uint64_t seed) {
    if (!(gamma > 0.0)) throw std::invalid_argument("empirical_moment: gamma must be > 0");
    return mc_mean_se(samples, [&](std::uint64_t i) {
        Rng rng(seed_for_item(seed, i));
        return std::pow(sample_point(model, n, rng).norm(), gamma);
    });
}

// Proper affine subspace L = point + col span(directions). directions may have
// zero columns (L is a single point).
struct AffineSubspace {
    Eigen::VectorXd point;
    Eigen::MatrixXd directions;  // d x k, k < d after rank check
};

// Distance from s to L via orthogonal projection onto the direction span.
class AffineDistance {
public:
    explicit AffineDistance(const AffineSubspace& L) : point_(L.point) {
        const auto d = L.point.size();
        if (L.directions.cols() == 0) {
            q_ = Eigen::MatrixXd::Zero(d, 0);
            return;
        }
        if (L.directions.rows() != d)
            throw std::invalid_argument("AffineSubspace: direction rows != dim");
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(L.directions);
        qr.setThreshold(1e-10);
        const auto rank = qr.rank();
        if (rank >= d)
            throw std::invalid_argument("AffineSubspace: directions span the whole space");
        Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, rank);
        q_ = Q;
    }

    double operator()(const Eigen::VectorXd& s) const {
        Eigen::VectorXd v = s - point_;
        if (q_.cols() > 0) v -= q_ * (q_.transpose() * v);
        return v.norm();
    }

private:
    Eigen::VectorXd point_;
    Eigen::MatrixXd q_;
};

// Empirical mass of the epsilon-neighborhood of L, per epsilon, on one shared
// sample set. Output is aligned with `epsilons`.
inline std::vector<std::pair<double, double>> affine_nonconcentration(
        const IFSModel& model, const AffineSubspace& subspace,
        const std::vector<double>& epsilons, int n, std::uint64_t samples,
        std::uint64_t seed) {
    AffineDistance dist(subspace);
    const auto counts = mc_tally(samples, epsilons.size(),
        [&](std::uint64_t i, std::vector<std::uint64_t>& bins) {
            Rng rng(seed_for_item(seed, i));
            const double r = dist(sample_point(model, n, rng));
            for (std::size_t k = 0; k < epsilons.size(); ++k)
                if (r <= epsilons[k]) ++bins[k];
        });
    std::vector<std::pair<double, double>> out;
    out.reserve(epsilons.size());
    for (std::size_t k = 0; k < epsilons.size(); ++k)
        out.emplace_back(epsilons[k], static_cast<double>(counts[k]) / static_cast<double>(samples));
    return out;
}

// Real polynomial on R^d as a table of (exponent multi-index, coefficient).
struct Polynomial {
    int dim = 1;
    std::vector<std::pair<std::vector<int>, double>> terms;

    double coeff_max_norm() const {
        double m = 0.0;
        for (const auto& t : terms) m = std::max(m, std::abs(t.second));
        return m;
    }

    double operator()(const Eigen::VectorXd& s) const {
        double acc = 0.0;
        for (const auto& [alpha, c] : terms) {
            double mono = c;
            for (int i = 0; i < dim; ++i)
                for (int e = 0; e < alpha[static_cast<std::size_t>(i)]; ++e) mono *= s[i];
            acc += mono;
        }
        return acc;
    }
};

// Empirical mass of {|P| <= eps} for a coefficient-normalized polynomial.
inline std::vector<std::pair<double, double>> polynomial_nonconcentration(
        const IFSModel& model, const Polynomial& poly,
        const std::vector<double>& epsilons, int n, std::uint64_t samples,
        std::uint64_t seed) {
    if (poly.dim != model.dimension())
        throw std::invalid_argument("polynomial_nonconcentration: dimension mismatch");
    if (poly.terms.empty() || poly.coeff_max_norm() == 0.0)
        throw std::invalid_argument("polynomial_nonconcentration: zero polynomial");
    if (std::abs(poly.coeff_max_norm() - 1.0) > kWeightTol)
        throw std::invalid_argument("polynomial_nonconcentration: coefficients not normalized to max-norm 1");
    const auto counts = mc_tally(samples, epsilons.size(),
        [&](std::uint64_t i, std::vector<std::uint64_t>& bins) {
            Rng rng(seed_for_item(seed, i));
            const double v = std::abs(poly(sample_point(model, n, rng)));
            for (std::size_t k = 0; k < epsilons.size(); ++k)
                if (v <= epsilons[k]) ++bins[k];
        });
    std::vector<std::pair<double, double>> out;
    out.reserve(epsilons.size());
    for (std::size_t k = 0; k < epsilons.size(); ++k)
        out.emplace_back(epsilons[k], static_cast<double>(counts[k]) / static_cast<double>(samples));
    return out;
}

// ---------------------------------------------------------------------------
// Presets. Strong irreducibility is a hypothesis of the underlying theory; it
// is not algorithmically checkable here and is only documented per preset.

struct PresetInfo {
    std::string name;
    std::string description;
    bool takes_parameter = false;
};

inline std::vector<PresetInfo> preset_catalog() {
    return {
        {"cantor3", "middle-thirds Cantor measure on R (strongly irreducible)", false},
        {"cantor5-missing", "base-5 Cantor measure with digit 2 removed (strongly irreducible)", false},
        {"cantor3-power-d2", "product of two middle-thirds Cantor measures on R^2 (strongly irreducible)", false},
        {"sierpinski-triangle", "normalized Hausdorff measure on the Sierpinski triangle (strongly irreducible)", false},
        {"sierpinski-carpet", "normalized Hausdorff measure on the Sierpinski carpet (strongly irreducible)", false},
        {"bernoulli-lambda", "Bernoulli convolution with parameter lambda in (0,1) (strongly irreducible)", true},
    };
}

inline IFSModel ifs_preset(const std::string& name, double parameter = 0.0) {
    const auto I1 = Eigen::MatrixXd::Identity(1, 1);
    const auto I2 = Eigen::MatrixXd::Identity(2, 2);
    auto v1 = [](double x) { return (Eigen::VectorXd(1) << x).finished(); };
    auto v2 = [](double x, double y) { return (Eigen::VectorXd(2) << x, y).finished(); };

    if (name == "cantor3") {
        return IFSModel(1,
            {{0.5, Similarity(1.0 / 3.0, I1, v1(0.0))},
             {0.5, Similarity(1.0 / 3.0, I1, v1(2.0 / 3.0))}},
            "cantor3");
    }
    if (name == "cantor5-missing") {
        std::vector<WeightedMap> maps;
        for (int digit : {0, 1, 3, 4})
            maps.push_back({0.25, Similarity(0.2, I1, v1(digit / 5.0))});
        return IFSModel(1, std::move(maps), "cantor5-missing");
    }
    if (name == "cantor3-power-d2") {
        std::vector<WeightedMap> maps;
        for (double bx : {0.0, 2.0 / 3.0})
            for (double by : {0.0, 2.0 / 3.0})
                maps.push_back({0.25, Similarity(1.0 / 3.0, I2, v2(bx, by))});
        return IFSModel(2, std::move(maps), "cantor3-power-d2");
    }
    if (name == "sierpinski-triangle") {
        const double h = std::sqrt(3.0) / 4.0;
        std::vector<WeightedMap> maps = {
            {1.0 / 3.0, Similarity(0.5, I2, v2(0.0, 0.0))},
            {1.0 / 3.0, Similarity(0.5, I2, v2(0.5, 0.0))},
            {1.0 / 3.0, Similarity(0.5, I2, v2(0.25, h))},
        };
        return IFSModel(2, std::move(maps), "sierpinski-triangle");
    }
    if (name == "sierpinski-carpet") {
        std::vector<WeightedMap> maps;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                if (i == 1 && j == 1) continue;
                maps.push_back({1.0 / 8.0, Similarity(1.0 / 3.0, I2, v2(i / 3.0, j / 3.0))});
            }
        return IFSModel(2, std::move(maps), "sierpinski-carpet");
    }
    if (name == "bernoulli-lambda") {
        const double lam = parameter;
        if (!(lam > 0.0 && lam < 1.0))
            throw std::invalid_argument("bernoulli-lambda: parameter must be in (0,1)");
        return IFSModel(1,
            {{0.5, Similarity(lam, I1, v1(-1.0))},
             {0.5, Similarity(lam, I1, v1(1.0))}},
            "bernoulli-lambda(" + std::to_string(lam) + ")");
    }
    throw std::invalid_argument("unknown IFS preset: " + name);
}

}  // namespace fraclat
