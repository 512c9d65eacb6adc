#include "fpf/measure.hpp"

#include <gtest/gtest.h>

#include <numbers>

#include "support/test_util.hpp"

using namespace fpf;
using namespace fpf::testing;

namespace {

constexpr double pi = std::numbers::pi;

const StateVector e0 = basis_state(2, 0);
const StateVector e1 = basis_state(2, 1);

QuantumHistory history(const std::vector<double>& t, const std::vector<StateVector>& s) {
    std::vector<FixedPoint> fps;
    for (std::size_t i = 0; i < t.size(); ++i) fps.emplace_back(t[i], s[i], "p" + std::to_string(i));
    return QuantumHistory(std::move(fps));
}

/// Oracle for |prod <next| U |prev>|^2 using Taylor propagators.
double oracle_delta_psi(const QuantumHistory& h, const HamiltonianSchedule& s) {
    Complex a{1.0};
    for (std::size_t i = 0; i + 1 < h.size(); ++i) {
        const Matrix u = oracle_propagate(s, h[i].time, h[i + 1].time);
        a *= (h[i + 1].state.adjoint() * u * h[i].state)(0, 0);
    }
    return std::norm(a);
}

HamiltonianSchedule sigma_x_eighth() { return HamiltonianSchedule::constant(pauli_x(), 0, pi / 4); }

}  // namespace

TEST(SegmentAmplitude, Examples) {
    const auto s0 = HamiltonianSchedule::zero(2, 0, 1);
    EXPECT_EQ(segment_amplitude(FixedPoint(0, e0), FixedPoint(1, e0), s0), Complex(1.0));
    EXPECT_EQ(segment_amplitude(FixedPoint(0, e0), FixedPoint(1, e1), s0), Complex(0.0));
    const Complex a = segment_amplitude(FixedPoint(0, e0), FixedPoint(pi / 4, e0), sigma_x_eighth());
    EXPECT_NEAR(std::abs(a), std::cos(pi / 4), 1e-15);
}

TEST(SegmentAmplitude, OutOfOrderThrows) {
    const auto s0 = HamiltonianSchedule::zero(2, 0, 1);
    EXPECT_THROW(segment_amplitude(FixedPoint(1, e0), FixedPoint(0, e0), s0), DomainError);
    EXPECT_THROW(segment_amplitude(FixedPoint(0.5, e0), FixedPoint(0.5, e0), s0), DomainError);
}

TEST(SegmentAmplitude, MatchesReverseOrderedElement) {
    // <a|U(t_a, t_b)|b> with the later-to-earlier propagator.
    SplitMix64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const auto grid = random_grid(rng, 2);
        const auto s = random_schedule_over(rng, 3, grid);
        const StateVector a = random_state(rng, 3), b = random_state(rng, 3);
        const Matrix back = oracle_propagate(s, grid[0], grid[1]).adjoint();
        const Complex expected = (a.adjoint() * back * b)(0, 0);
        const Complex got = segment_amplitude(FixedPoint(grid[0], a), FixedPoint(grid[1], b), s);
        EXPECT_LT(std::abs(got - expected), 1e-10);
        EXPECT_LE(std::abs(got), 1.0 + 1e-10);
    }
}

TEST(DeltaPsi, Examples) {
    const auto s0 = HamiltonianSchedule::zero(2, 0, 2);
    EXPECT_EQ(delta_psi(history({0, 1}, {e0, e0}), s0), 1.0);
    EXPECT_NEAR(delta_psi(history({0, pi / 4}, {e0, e0}), sigma_x_eighth()), 0.5, 1e-15);
    EXPECT_EQ(delta_psi(history({0, 1, 2}, {e0, e1, e0}), s0), 0.0);
}

TEST(DeltaPsi, MatchesOracleInUnitInterval) {
    SplitMix64 rng(32);
    for (int trial = 0; trial < 200; ++trial) {
        const auto d = 1 + static_cast<Eigen::Index>(rng.below(5));
        const auto n = 2 + rng.below(3);
        const auto grid = random_grid(rng, n);
        const auto s = random_schedule_over(rng, d, grid);
        std::vector<StateVector> states;
        for (std::size_t i = 0; i < n; ++i) states.push_back(random_state(rng, d));
        const auto h = history(grid, states);
        const double v = delta_psi(h, s);
        EXPECT_NEAR(v, oracle_delta_psi(h, s), 1e-10);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0 + 1e-10);
    }
}

TEST(LineIntegral, StaticIdenticalStates) {
    const auto s0 = HamiltonianSchedule::zero(2, 0, 1);
    for (int steps : {1, 2, 8, 64}) EXPECT_NEAR(delta_psi_line_integral(history({0, 1}, {e0, e0}), s0, steps), 1.0, 1e-15);
}

TEST(LineIntegral, SigmaXEighth) {
    const auto h = history({0, pi / 4}, {e0, e0});
    for (int steps : {1, 8, 64}) EXPECT_NEAR(delta_psi_line_integral(h, sigma_x_eighth(), steps), 0.5, 1e-12);
}

TEST(LineIntegral, ContractionIsRealAndMatchesClosedForm) {
    SplitMix64 rng(33);
    for (int trial = 0; trial < 200; ++trial) {
        const auto d = 2 + static_cast<Eigen::Index>(rng.below(3));
        const auto grid = random_grid(rng, 3);
        const auto s = random_schedule_over(rng, d, grid);
        std::vector<StateVector> states;
        for (std::size_t i = 0; i < 3; ++i) states.push_back(random_basis(rng, d)[rng.below(static_cast<std::uint64_t>(d))]);
        const auto h = history(grid, states);
        const Complex c = contour_line_integral(h, s, 1 + static_cast<int>(rng.below(16)));
        EXPECT_LE(std::abs(c.imag()), 1e-10);
        EXPECT_NEAR(c.real(), delta_psi(h, s), 1e-10);
        EXPECT_NEAR(c.real(), oracle_delta_psi(h, s), 1e-10);
    }
}

TEST(LineIntegral, RejectsZeroSteps) {
    EXPECT_THROW(delta_psi_line_integral(history({0, 1}, {e0, e0}), HamiltonianSchedule::zero(2, 0, 1), 0),
                 DomainError);
}

TEST(MeasureOfExistence, BornExample) {
    SplitMix64 rng(34);
    const auto s = HamiltonianSchedule::constant(random_hermitian(rng, 3), 0, 1);
    const StateVector psi = random_state(rng, 3);
    const auto basis = random_basis(rng, 3);
    FamilyLayout layout{TimeGrid({0.0, 1.0}), {{psi}, basis}, {{0, psi}}};
    const auto ef = enumerate_family(layout);
    const StateVector evolved = oracle_propagate(s, 0, 1) * psi;
    for (std::size_t k = 0; k < ef.family.size(); ++k) {
        const double expected = std::norm(inner(basis[k], evolved));
        EXPECT_NEAR(measure_of_existence(ef.family[k], ef.family, s), expected, 1e-12);
    }
}

TEST(MeasureOfExistence, StaticPreparation) {
    const auto s0 = HamiltonianSchedule::zero(2, 0, 1);
    FamilyLayout layout{TimeGrid({0.0, 1.0}), {{e0}, computational_basis(2)}, {{0, e0}}};
    const auto ef = enumerate_family(layout);
    EXPECT_EQ(measure_of_existence(ef.family[0], ef.family, s0), 1.0);
    EXPECT_EQ(measure_of_existence(ef.family[1], ef.family, s0), 0.0);
}

TEST(MeasureOfExistence, SigmaXEighthHalves) {
    FamilyLayout layout{TimeGrid({0.0, pi / 4}), {{e0}, computational_basis(2)}, {{0, e0}}};
    const auto ef = enumerate_family(layout);
    const auto s = sigma_x_eighth();
    EXPECT_NEAR(measure_of_existence(ef.family[0], ef.family, s), 0.5, 1e-15);
    EXPECT_NEAR(measure_of_existence(ef.family[1], ef.family, s), 0.5, 1e-15);
}

TEST(MeasureOfExistence, ZeroNormalizationIsAnError) {
    const auto s0 = HamiltonianSchedule::zero(2, 0, 1);
    FamilyLayout layout{TimeGrid({0.0, 1.0}), {{e0}, {e1}}, {{0, e0}, {1, e1}}};
    const auto ef = enumerate_family(layout);
    ASSERT_EQ(ef.family.size(), 1u);
    EXPECT_THROW(measure_of_existence(ef.family[0], ef.family, s0), ZeroNormalizationError);
    EXPECT_THROW(measure_report(ef, s0), ZeroNormalizationError);
}

TEST(MeasureOfExistence, RequiresMembership) {
    const auto s0 = HamiltonianSchedule::zero(2, 0, 1);
    FamilyLayout layout{TimeGrid({0.0, 1.0}), {{e0}, computational_basis(2)}, {{0, e0}}};
    const auto ef = enumerate_family(layout);
    const auto stranger = history({0, 1}, {e0, ket({inv_sqrt2, inv_sqrt2})});
    EXPECT_THROW(measure_of_existence(stranger, ef.family, s0), DomainError);
}

TEST(MeasureReport, NormalizedWithRoutes) {
    SplitMix64 rng(35);
    for (int trial = 0; trial < 50; ++trial) {
        const auto d = 2 + static_cast<Eigen::Index>(rng.below(2));
        const auto grid = random_grid(rng, 3);
        const auto s = random_schedule_over(rng, d, grid);
        FamilyLayout layout{TimeGrid(grid), {random_basis(rng, d), random_basis(rng, d), random_basis(rng, d)},
                            {{0, random_state(rng, d)}}};
        const auto r = measure_report(enumerate_family(layout), s, 8);
        EXPECT_NEAR(r.total(), 1.0, 1e-10);
        ASSERT_TRUE(r.max_route_discrepancy.has_value());
        EXPECT_LE(*r.max_route_discrepancy, 1e-10);
        for (const auto& e : r.entries) EXPECT_NEAR(e.measure, e.delta_psi / r.normalization, 1e-15);
    }
}

TEST(MeasureReport, PrePostSelection) {
    // Both endpoints fixed, one free intermediate time: measures are ratios
    // of two-segment products and sum to one.
    SplitMix64 rng(36);
    for (int trial = 0; trial < 100; ++trial) {
        const auto d = 2 + static_cast<Eigen::Index>(rng.below(3));
        const auto grid = random_grid(rng, 3);
        const auto s = random_schedule_over(rng, d, grid);
        const StateVector pre = random_state(rng, d), post = random_state(rng, d);
        const auto mid = random_basis(rng, d);
        FamilyLayout layout{TimeGrid(grid), {{pre}, mid, {post}}, {{0, pre}, {2, post}}};
        const auto r = measure_report(enumerate_family(layout), s);
        ASSERT_EQ(r.entries.size(), static_cast<std::size_t>(d));
        std::vector<double> w;
        double z = 0.0;
        for (const auto& m : mid) {
            const double first = std::norm(inner(m, StateVector(oracle_propagate(s, grid[0], grid[1]) * pre)));
            const double second = std::norm(inner(post, StateVector(oracle_propagate(s, grid[1], grid[2]) * m)));
            w.push_back(first * second);
            z += first * second;
        }
        for (std::size_t k = 0; k < w.size(); ++k) EXPECT_NEAR(r.entries[k].measure, w[k] / z, 1e-10);
        EXPECT_NEAR(r.total(), 1.0, 1e-10);
    }
}

TEST(BornProbability, Examples) {
    SplitMix64 rng(37);
    const auto grid = random_grid(rng, 2);
    const auto s = random_schedule_over(rng, 4, grid);
    const StateVector psi = random_state(rng, 4);
    const StateVector evolved = evolve_state(psi, s, grid[0], grid[1]);
    EXPECT_NEAR(born_probability(psi, grid[0], evolved, grid[1], s), 1.0, 1e-12);
    const StateVector orth = complete_basis(evolved)[1];
    EXPECT_NEAR(born_probability(psi, grid[0], orth, grid[1], s), 0.0, 1e-12);
    EXPECT_NEAR(born_probability(e0, 0, e0, pi / 4, sigma_x_eighth()), 0.5, 1e-15);
    EXPECT_THROW(born_probability(e0, 0.5, e0, 0.5, sigma_x_eighth()), DomainError);
}

TEST(BornProbability, MatchesStandardRule) {
    SplitMix64 rng(38);
    for (int trial = 0; trial < 200; ++trial) {
        const auto d = 1 + static_cast<Eigen::Index>(rng.below(8));
        const auto grid = random_grid(rng, 2);
        const auto s = random_schedule_over(rng, d, grid);
        const StateVector psi = random_state(rng, d), phi = random_state(rng, d);
        const double expected = std::norm(inner(phi, StateVector(oracle_propagate(s, grid[0], grid[1]) * psi)));
        EXPECT_NEAR(born_probability(psi, grid[0], phi, grid[1], s), expected, 1e-12);
    }
}

TEST(CompleteBasis, StartsWithSeed) {
    SplitMix64 rng(39);
    for (int trial = 0; trial < 50; ++trial) {
        const StateVector v = random_state(rng, 5);
        const auto b = complete_basis(v);
        EXPECT_EQ(b.front(), v);
        EXPECT_TRUE(is_orthonormal_set(b, true));
    }
    const auto b = complete_basis(e1);
    EXPECT_TRUE(is_orthonormal_set(b, true));
}

namespace {

ToyBundle paper_toy(const StateVector& pivot) {
    return ToyBundle{0.0, computational_basis(2), 0.6, pivot, 1.5, computational_basis(2)};
}

}  // namespace

TEST(Decompose, TermCounts) {
    const HamiltonianSchedule s({Segment{0, 0.6, pauli_x()}, Segment{0.6, 1.5, pauli_z() + 0.3 * pauli_y()}});
    const auto bundle = paper_toy(ket({inv_sqrt2, Complex(0, inv_sqrt2)}));
    EXPECT_EQ(decompose_total_measure(bundle, s, DecompositionMode::MORW).terms.size(), 1u);
    EXPECT_EQ(decompose_total_measure(bundle, s, DecompositionMode::MMWF).terms.size(), 2u);
    EXPECT_EQ(decompose_total_measure(bundle, s, DecompositionMode::MMWP).terms.size(), 2u);
    EXPECT_EQ(decompose_total_measure(bundle, s, DecompositionMode::MDRW).terms.size(), 4u);
}

TEST(Decompose, StaticBundleTotalsOne) {
    const auto s0 = HamiltonianSchedule::zero(2, 0, 1.5);
    const ToyBundle bundle{0.0, {e0}, 0.6, e0, 1.5, {e0}};
    for (auto mode : all_decomposition_modes) EXPECT_EQ(decompose_total_measure(bundle, s0, mode).total, 1.0);
}

TEST(Decompose, TotalsAgreeAndMdrwReconstructsProduct) {
    SplitMix64 rng(40);
    for (int trial = 0; trial < 500; ++trial) {
        const auto grid = random_grid(rng, 3);
        const auto s = random_schedule_over(rng, 2, grid);
        const ToyBundle bundle{grid[0], computational_basis(2), grid[1], random_state(rng, 2), grid[2],
                               computational_basis(2)};
        const auto morw = decompose_total_measure(bundle, s, DecompositionMode::MORW);
        for (auto mode : all_decomposition_modes) {
            EXPECT_NEAR(decompose_total_measure(bundle, s, mode).total, morw.total, 1e-12) << to_string(mode);
        }
        const auto mdrw = decompose_total_measure(bundle, s, DecompositionMode::MDRW);
        double sum = 0.0;
        for (double t : mdrw.terms) sum += t;
        EXPECT_NEAR(sum, morw.terms.front(), 1e-12);
    }
}

TEST(Decompose, RejectsNonOrthonormalBranches) {
    const auto s0 = HamiltonianSchedule::zero(2, 0, 1.5);
    const ToyBundle bundle{0.0, {e0, ket({inv_sqrt2, inv_sqrt2})}, 0.6, e0, 1.5, {e0}};
    EXPECT_THROW(decompose_total_measure(bundle, s0, DecompositionMode::MORW), ValidationError);
}
