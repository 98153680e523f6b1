#include <cmath>

#include "support.hpp"

namespace stsync {
namespace {

using testing::max_abs_diff;
using testing::random_ensemble;
using testing::random_frequencies;
using testing::uniform_xi;

TEST(Topology, SeparableWeights) {
    const Topology t = Topology::separable({1.0, 2.0, 0.5});
    EXPECT_TRUE(t.is_separable());
    EXPECT_EQ(t.weight(1, 2), 1.0);
    EXPECT_EQ(t.weight(1, 1), 4.0);
    EXPECT_EQ(t.max_weight(), 4.0);
    EXPECT_THROW(Topology::separable({1.0, 0.0}), ValidationError);
}

TEST(Topology, GeneralValidation) {
    EXPECT_THROW(Topology::general(Mat(2, 2, {0, 1, 2, 0})), ValidationError);
    EXPECT_THROW(Topology::general(Mat(2, 2, {0, -1, -1, 0})), ValidationError);
    EXPECT_THROW(Topology::general(Mat(3, 3, {0, 1, 0, 1, 0, 0, 0, 0, 0})), ValidationError);
    EXPECT_THROW(Topology::general(Mat(2, 3)), DimensionError);
    const Topology path = Topology::general(Mat(3, 3, {0, 1, 0, 1, 0, 2, 0, 2, 0}));
    EXPECT_FALSE(path.is_separable());
    EXPECT_THROW(path.xi(), UnsupportedError);
}

TEST(ModelConfig, RejectsInconsistentParts) {
    EXPECT_THROW(ModelConfig(-1.0, Topology::all_to_all(2), FrequencySet::zero(2, 1), 2, 1), ValidationError);
    EXPECT_THROW(ModelConfig(1.0, Topology::all_to_all(3), FrequencySet::zero(2, 1), 2, 1), DimensionError);
    EXPECT_THROW(ModelConfig(1.0, Topology::all_to_all(2), FrequencySet::zero(2, 2), 2, 1), DimensionError);
    EXPECT_THROW(ModelConfig(1.0, Topology::all_to_all(2), FrequencySet::zero(2, 3), 2, 3 + 0), DimensionError);
}

TEST(Rhs, ConsensusIsEquilibrium) {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t agents = 2 + trial % 5;
        const StiefelPoint s = random_stiefel(5, 1 + trial % 3, rng);
        const EnsembleState e(std::vector<StiefelPoint>(agents, s));
        const Topology topo = trial % 2 ? Topology::separable(uniform_xi(agents, 0.5, 2.0, rng))
                                        : Topology::all_to_all(agents);
        const ModelConfig cfg(rng.uniform(0.1, 5.0), topo, FrequencySet::zero(agents, s.p()), 5, s.p());
        for (const auto& v : rhs(e, cfg)) EXPECT_LE(frobenius(v), 1e-12);
    }
}

TEST(Rhs, DecoupledDriftWhenKappaZero) {
    Rng rng(2);
    const EnsembleState e = random_ensemble(4, 5, 3, rng);
    const FrequencySet f = random_frequencies(4, 3, 1.0, rng);
    const ModelConfig cfg(0.0, Topology::all_to_all(4), f, 5, 3);
    const auto v = rhs(e, cfg);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(v[i], matmul(e[i].mat(), f[i].mat()));
}

TEST(Rhs, CircleReducesToScalarKuramoto) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t agents = 2 + trial % 4;
        std::vector<double> theta(agents);
        std::vector<StiefelPoint> pts;
        for (auto& th : theta) {
            th = rng.uniform(-M_PI, M_PI);
            pts.emplace_back(Mat(2, 1, {std::cos(th), std::sin(th)}));
        }
        const std::vector<double> xi = uniform_xi(agents, 0.5, 1.5, rng);
        const Topology topo = Topology::separable(xi);
        const double kappa = rng.uniform(0.5, 3.0);
        const ModelConfig cfg(kappa, topo, FrequencySet::zero(agents, 1), 2, 1);
        const auto v = rhs(EnsembleState(pts), cfg);
        for (std::size_t i = 0; i < agents; ++i) {
            double dtheta = 0.0;
            for (std::size_t k = 0; k < agents; ++k) dtheta += topo.weight(i, k) * std::sin(theta[k] - theta[i]);
            dtheta *= kappa / static_cast<double>(agents);
            EXPECT_NEAR(v[i](0, 0), -std::sin(theta[i]) * dtheta, 1e-14);
            EXPECT_NEAR(v[i](1, 0), std::cos(theta[i]) * dtheta, 1e-14);
        }
    }
}

TEST(Rhs, TangentOnRandomStates) {
    Rng rng(4);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t p = 1 + trial % 4;
        const std::size_t n = p + trial % 3;
        const std::size_t agents = 1 + trial % 7;
        const EnsembleState e = random_ensemble(agents, n, p, rng);
        const ModelConfig cfg(rng.uniform(0.0, 5.0), Topology::separable(uniform_xi(agents, 0.1, 3.0, rng)),
                              random_frequencies(agents, p, rng.uniform(0.0, 3.0), rng), n, p);
        const auto v = rhs(e, cfg);
        for (std::size_t i = 0; i < agents; ++i) EXPECT_LE(tangent_residual(e[i], v[i]), 1e-12);
    }
}

TEST(Rhs, ShapeMismatchThrows) {
    Rng rng(5);
    const ModelConfig cfg(1.0, Topology::all_to_all(3), FrequencySet::zero(3, 2), 4, 2);
    EXPECT_THROW(rhs(random_ensemble(2, 4, 2, rng), cfg), DimensionError);
    EXPECT_THROW(rhs(random_ensemble(3, 5, 2, rng), cfg), DimensionError);
}

TEST(Rhs, FrameEquivariance) {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t agents = 4, n = 5, p = 3;
        const EnsembleState e = random_ensemble(agents, n, p, rng);
        const SkewMat common = rng.skew(p);
        std::vector<SkewMat> freqs;
        for (std::size_t i = 0; i < agents; ++i) freqs.push_back(rng.uniform(0.5, 1.5) * common);
        std::vector<SkewMat> shifted;
        for (const auto& f : freqs) shifted.push_back(f - common);
        const Topology topo = Topology::separable(uniform_xi(agents, 0.5, 1.5, rng));
        const ModelConfig original(1.3, topo, FrequencySet(freqs), n, p);
        const ModelConfig relative(1.3, topo, FrequencySet(shifted), n, p);

        const double t = rng.uniform(0.0, 5.0);
        const EnsembleState moved = moving_frame(e, common, t);
        const Mat rot = expm_skew((-t) * common);
        const auto direct = rhs(moved, relative);
        const auto base = rhs(e, original);
        for (std::size_t i = 0; i < agents; ++i) {
            const Mat transported = matmul(base[i], rot) - matmul(moved[i].mat(), common.mat());
            EXPECT_LE(max_abs_diff(direct[i], transported), 1e-10);
        }
    }
}

TEST(Potential, Examples) {
    Rng rng(7);
    const StiefelPoint s = random_stiefel(4, 2, rng);
    EXPECT_EQ(potential(EnsembleState({s, s, s}), Topology::all_to_all(3)), 0.0);

    const StiefelPoint a = random_stiefel(4, 2, rng), b = random_stiefel(4, 2, rng);
    const double d = frobenius_dist(a.mat(), b.mat());
    EXPECT_NEAR(potential(EnsembleState({a, b}), Topology::all_to_all(2)), d * d, 1e-14);
}

TEST(Potential, MatchesDoubleLoop) {
    Rng rng(8);
    const std::size_t agents = 5;
    const EnsembleState e = random_ensemble(agents, 4, 2, rng);
    Mat w(agents, agents);
    for (std::size_t i = 0; i < agents; ++i)
        for (std::size_t k = i + 1; k < agents; ++k) w(i, k) = w(k, i) = rng.uniform(0.1, 2.0);
    const Topology topo = Topology::general(w);
    double s = 0.0;
    for (std::size_t i = 0; i < agents; ++i)
        for (std::size_t k = 0; k < agents; ++k) s += w(i, k) * frobenius_sq(e[i].mat() - e[k].mat());
    EXPECT_NEAR(potential(e, topo), s / agents, 1e-13);
}

TEST(MovingFrame, IdentityCases) {
    Rng rng(9);
    const EnsembleState e = random_ensemble(3, 4, 2, rng);
    EXPECT_EQ(moving_frame(e, rng.skew(2), 0.0), e);
    EXPECT_EQ(moving_frame(e, SkewMat::zero(2), 17.0), e);
    EXPECT_THROW(moving_frame(e, SkewMat::zero(3), 1.0), DimensionError);
}

ModelConfig uniform_config(std::size_t agents, std::size_t p, double kappa) {
    return ModelConfig(kappa, Topology::all_to_all(agents), FrequencySet::zero(agents, p), p + 1, p);
}

TEST(CheckFramework, UniformXiArithmetic) {
    Rng rng(10);
    for (std::size_t p = 1; p <= 3; ++p) {
        const ModelConfig cfg = uniform_config(4, p, 1.0);
        const StiefelPoint s = random_stiefel(p + 1, p, rng);
        const FrameworkReport r = check_framework(cfg, EnsembleState(std::vector<StiefelPoint>(4, s)));
        EXPECT_EQ(r.f1_lhs, 1.0);
        EXPECT_EQ(r.f1_rhs, 4.0);
        EXPECT_EQ(r.f2_lhs, 0.0);
        EXPECT_NEAR(r.f2_rhs, 1.0 / 3.0, 1e-15);
        EXPECT_EQ(r.f3_lhs, 0.0);
        EXPECT_GT(r.f3_rhs, 0.0);
        EXPECT_NEAR(r.f4_bound, 1.0 / (10.0 * std::sqrt(static_cast<double>(p))), 1e-15);
        EXPECT_TRUE(r.all());
        ASSERT_TRUE(r.delta_lower.has_value());
        EXPECT_GT(*r.delta_lower, 0.0);
    }
}

TEST(CheckFramework, TopologyBoundaryFailsOnlyThatCondition) {
    // xi = {1, 1 + d}: condition 2 reads d < (1 + d/2) / (3 (1 + d)).
    auto gap = [](double d) { return (1.0 + 0.5 * d) / (3.0 * (1.0 + d)) - d; };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) > 0.0 ? lo : hi) = mid;
    }
    Rng rng(11);
    const StiefelPoint s = random_stiefel(3, 2, rng);
    const EnsembleState e(std::vector<StiefelPoint>(2, s));
    const auto report = [&](double d) {
        return check_framework(ModelConfig(1.0, Topology::separable({1.0, 1.0 + d}), FrequencySet::zero(2, 2), 3, 2), e);
    };
    const FrameworkReport inside = report(hi * (1.0 - 1e-6));
    const FrameworkReport outside = report(hi * (1.0 + 1e-6));
    EXPECT_TRUE(inside.satisfied[1]);
    EXPECT_FALSE(outside.satisfied[1]);
    EXPECT_LT(outside.margin(1), 0.0);
    EXPECT_TRUE(outside.satisfied[0]);
}

TEST(CheckFramework, BooleansTrackMarginSigns) {
    Rng rng(12);
    int seen_fail[4] = {0, 0, 0, 0};
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t agents = 2 + trial % 5, p = 1 + trial % 3, n = p + 1;
        const Topology topo = Topology::separable(uniform_xi(agents, 1.0, 1.0 + rng.uniform(0.0, 2.5), rng));
        const double kappa = rng.uniform(0.5, 2.0);
        const ModelConfig cfg(kappa, topo, random_frequencies(agents, p, rng.uniform(0.0, 0.02), rng), n, p);
        const EnsembleState e = near_consensus(random_stiefel(n, p, rng), agents, rng.uniform(0.0, 0.1), rng);
        const FrameworkReport r = check_framework(cfg, e);
        for (int k = 0; k < 4; ++k) {
            EXPECT_EQ(r.satisfied[k], r.margin(k) > 0.0);
            seen_fail[k] += !r.satisfied[k];
        }
    }
    EXPECT_GT(seen_fail[0], 0);
    EXPECT_GT(seen_fail[1], 0);
    EXPECT_GT(seen_fail[3], 0);
}

TEST(CheckFramework, FrequencyAndDiameterFlipsAreIsolated) {
    Rng rng(13);
    const std::size_t agents = 4, p = 2, n = 3;
    const StiefelPoint base = random_stiefel(n, p, rng);
    const EnsembleState tight(std::vector<StiefelPoint>(agents, base));
    const ModelConfig zero = uniform_config(agents, p, 1.0);
    const FrameworkReport r0 = check_framework(ModelConfig(1.0, Topology::all_to_all(agents),
                                                           FrequencySet::zero(agents, p), n, p), tight);
    // Heterogeneity just above the admissible bound: only condition 3 fails
    // (condition 4's bound also turns negative, so use a consensus state there).
    std::vector<SkewMat> f(agents, SkewMat::zero(p));
    const double mag = r0.f3_rhs * 1.01;
    f[0] = SkewMat(Mat(2, 2, {0, -mag / std::sqrt(2.0), mag / std::sqrt(2.0), 0}));
    const FrameworkReport hot = check_framework(ModelConfig(1.0, Topology::all_to_all(agents), FrequencySet(f), n, p), tight);
    EXPECT_TRUE(hot.satisfied[0] && hot.satisfied[1]);
    EXPECT_FALSE(hot.satisfied[2]);

    // Wide initial data: only condition 4 fails.
    const EnsembleState wide = near_consensus(base, agents, 0.5, rng);
    const FrameworkReport w = check_framework(ModelConfig(1.0, Topology::all_to_all(agents),
                                                          FrequencySet::zero(agents, p), n, p), wide);
    EXPECT_TRUE(w.satisfied[0] && w.satisfied[1] && w.satisfied[2]);
    EXPECT_FALSE(w.satisfied[3]);
    EXPECT_FALSE(w.delta_lower.has_value());
    (void)zero;
}

TEST(CheckFramework, Errors) {
    Rng rng(14);
    const EnsembleState e = random_ensemble(3, 3, 2, rng);
    const ModelConfig general(1.0, Topology::general(Mat(3, 3, {0, 1, 1, 1, 0, 1, 1, 1, 0})), FrequencySet::zero(3, 2), 3, 2);
    EXPECT_THROW(check_framework(general, e), UnsupportedError);
    EXPECT_THROW(check_framework(uniform_config(3, 2, 0.0), random_ensemble(3, 3, 2, rng)), PreconditionError);
}

TEST(DeltaRate, Examples) {
    const ModelConfig cfg = uniform_config(3, 2, 2.0);
    EXPECT_EQ(delta_rate(cfg, 2.0), 0.0);
    EXPECT_EQ(delta_rate(cfg, 0.0), 6.0);
    Rng rng(15);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t agents = 5, p = 2, n = 4;
        const ModelConfig c(rng.uniform(0.5, 2.0), Topology::separable(uniform_xi(agents, 1.0, 1.02, rng)),
                            random_frequencies(agents, p, 1e-4, rng), n, p);
        const EnsembleState e = near_consensus(random_stiefel(n, p, rng), agents, 1e-3, rng);
        const FrameworkReport r = check_framework(c, e);
        ASSERT_TRUE(r.all());
        EXPECT_GT(delta_rate(c, r.eps_sup), 0.0);
    }
}

TEST(EpsilonOfT, Examples) {
    EXPECT_EQ(epsilon_of_t(uniform_config(3, 2, 1.0), 0.0, 0.0), 0.0);

    // xi = 1, p = 1, kappa = 1, diameters 0.1: 5 * 0.2 plus D(Xi) (zero for p = 1).
    EXPECT_NEAR(epsilon_of_t(uniform_config(3, 1, 1.0), 0.1, 0.1), 1.0, 1e-15);
}

TEST(EpsilonOfT, MatchesIndependentFormula) {
    Rng rng(16);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t agents = 2 + trial % 5, p = 1 + trial % 4;
        std::vector<double> xi = uniform_xi(agents, 0.2, 3.0, rng);
        const FrequencySet f = random_frequencies(agents, p, 1.0, rng);
        const double kappa = rng.uniform(0.1, 4.0);
        const ModelConfig cfg(kappa, Topology::separable(xi), f, p + 1, p);
        const double d1 = rng.uniform(0.0, 2.0), d2 = rng.uniform(0.0, 2.0);

        const double big = *std::max_element(xi.begin(), xi.end());
        const double small = *std::min_element(xi.begin(), xi.end());
        double dfreq = 0.0;
        for (std::size_t i = 0; i < agents; ++i)
            for (std::size_t j = 0; j < agents; ++j) dfreq = std::max(dfreq, frobenius(f[i].mat() - f[j].mat()));
        const double want = 5.0 * kappa * big * big * std::sqrt(double(p)) * (d1 + d2) +
                            3.0 * kappa * big * (big - small) + dfreq;
        EXPECT_NEAR(epsilon_of_t(cfg, d1, d2), want, 1e-12 * want);
    }
}

TEST(InvariantCubic, Roots) {
    EXPECT_TRUE(invariant_cubic_roots(0.0).empty());
    const auto r = invariant_cubic_roots(1.0);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_NEAR(r[0], (std::sqrt(5.0) - 1.0) / 2.0, 1e-14);
    EXPECT_NEAR(r[1], 1.0, 1e-14);
    EXPECT_TRUE(invariant_cubic_roots(cubic_critical_offset()).empty());
    EXPECT_TRUE(invariant_cubic_roots(1.2).empty());
    for (double c = 0.01; c < cubic_critical_offset(); c += 0.01) {
        for (double root : invariant_cubic_roots(c)) {
            EXPECT_LE(std::abs(invariant_cubic(root, c)), 1e-12);
            EXPECT_GT(root, 0.0);
            EXPECT_LT(root, std::sqrt(2.0));
        }
    }
}

}  // namespace
}  // namespace stsync
