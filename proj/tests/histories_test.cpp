#include "fpf/histories.hpp"

#include <gtest/gtest.h>

#include <numbers>

#include "support/test_util.hpp"

using namespace fpf;
using namespace fpf::testing;

namespace {

constexpr double pi = std::numbers::pi;

const StateVector e0 = basis_state(2, 0);
const StateVector e1 = basis_state(2, 1);
const StateVector plus = ket({inv_sqrt2, inv_sqrt2});
const StateVector minus = ket({inv_sqrt2, -inv_sqrt2});

QuantumHistory two_point(const StateVector& a, const StateVector& b, double t1 = 0, double t2 = 1) {
    return QuantumHistory({FixedPoint(t1, a, "a"), FixedPoint(t2, b, "b")});
}

/// Independent oracle: Tr[C rho C^dagger] from explicit Heisenberg projectors
/// built with Taylor-series propagators.
double oracle_chain(const std::vector<FixedPoint>& fps, const HamiltonianSchedule& s, const StateVector& psi1) {
    const auto d = psi1.size();
    Matrix c = Matrix::Identity(d, d);
    for (std::size_t i = 1; i < fps.size(); ++i) {
        const Matrix u = oracle_propagate(s, fps[0].time, fps[i].time);
        const Matrix p = u.adjoint() * fps[i].state * fps[i].state.adjoint() * u;
        c = p * c;
    }
    const Matrix rho = psi1 * psi1.adjoint();
    return (c * rho * c.adjoint()).trace().real();
}

}  // namespace

TEST(FixedPoint, RejectsUnnormalized) {
    EXPECT_THROW(FixedPoint(0, StateVector(2.0 * e0)), ValidationError);
}

TEST(QuantumHistory, Invariants) {
    EXPECT_THROW(QuantumHistory({FixedPoint(0, e0)}), DomainError);
    EXPECT_THROW(QuantumHistory({FixedPoint(1, e0), FixedPoint(0, e1)}), DomainError);
    EXPECT_THROW(QuantumHistory({FixedPoint(0, e0), FixedPoint(1, basis_state(3, 0))}), DimensionError);
    EXPECT_EQ(two_point(e0, e1).size(), 2u);
}

TEST(HistoryInner, SelfOverlapIsOne) {
    const auto h = two_point(plus, e1);
    EXPECT_NEAR(std::abs(history_inner(h, h) - 1.0), 0.0, 1e-15);
}

TEST(HistoryInner, OrthogonalAtOneTime) {
    EXPECT_EQ(history_inner(two_point(e0, e0), two_point(e0, e1)), Complex(0.0));
}

TEST(HistoryInner, HalfOverlap) {
    const Complex v = history_inner(two_point(e0, e0), two_point(e0, plus));
    EXPECT_NEAR(v.real(), 0.5, 1e-15);
    EXPECT_NEAR(v.imag(), 0.0, 1e-15);
}

TEST(HistoryInner, GridMismatchThrows) {
    EXPECT_THROW(history_inner(two_point(e0, e0, 0, 1), two_point(e0, e0, 0, 2)), DomainError);
}

TEST(ValidateFamily, OrthonormalBasesAreValid) {
    SplitMix64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        FamilyLayout layout{TimeGrid({0.0, 1.0, 2.0}), {random_basis(rng, 3), random_basis(rng, 3), random_basis(rng, 3)}, {}};
        const auto ef = enumerate_family(layout);
        EXPECT_EQ(ef.family.size(), 27u);
        EXPECT_TRUE(validate_family(ef.family).valid);
    }
}

TEST(ValidateFamily, DuplicateReported) {
    const HistoryFamily fam({two_point(e0, e1), two_point(e1, e1), two_point(e0, e1)}, {});
    const auto r = validate_family(fam);
    EXPECT_FALSE(r.valid);
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].first, 0u);
    EXPECT_EQ(r.violations[0].second, 2u);
}

TEST(ValidateFamily, NonOrthogonalReportsHalf) {
    const HistoryFamily fam({two_point(e0, e0), two_point(e0, plus)}, {});
    const auto r = validate_family(fam);
    EXPECT_FALSE(r.valid);
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_NEAR(std::abs(r.violations[0].overlap), 0.5, 1e-15);
}

TEST(HistoryOperator, PlainProjectorWhenStatic) {
    const auto s = HamiltonianSchedule::zero(2, 0, 1);
    const std::vector<FixedPoint> fps{FixedPoint(0, e0), FixedPoint(1, plus)};
    const auto op = history_operator(fps, s, 0);
    ASSERT_EQ(op.projectors.size(), 1u);
    EXPECT_LT(max_diff(op.projectors[0], projector(plus)), 1e-15);
}

TEST(HistoryOperator, CountAndOrder) {
    const auto s = HamiltonianSchedule::constant(pauli_x(), 0, 2);
    const std::vector<FixedPoint> fps{FixedPoint(0, e0), FixedPoint(0.5, e1), FixedPoint(1.5, plus)};
    const auto op = history_operator(fps, s, 0);
    ASSERT_EQ(op.projectors.size(), 2u);
    EXPECT_EQ(op.times[0], 1.5);
    EXPECT_EQ(op.times[1], 0.5);
    const StateVector direct = op.product(2) * e0;
    EXPECT_LT((record_state(op, e0) - direct).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(HistoryOperator, UnorderedThrows) {
    const auto s = HamiltonianSchedule::zero(2, 0, 2);
    const std::vector<FixedPoint> fps{FixedPoint(0, e0), FixedPoint(1.5, e1), FixedPoint(0.5, e0)};
    EXPECT_THROW(history_operator(fps, s, 0), DomainError);
}

TEST(RecordState, Examples) {
    const auto s = HamiltonianSchedule::constant(pauli_x(), 0, pi / 4);
    const HistoryOperator identity{};
    const StateVector psi = ket({0.6, Complex(0, 0.8)});
    EXPECT_EQ(record_state(identity, psi), psi);

    const auto s0 = HamiltonianSchedule::zero(2, 0, 1);
    EXPECT_EQ(record_state(history_operator(std::vector<FixedPoint>{FixedPoint(0, e0), FixedPoint(1, e1)}, s0, 0), e0)
                  .norm(),
              0.0);

    const std::vector<FixedPoint> fps{FixedPoint(0, e0), FixedPoint(pi / 4, e0)};
    EXPECT_NEAR(record_state(history_operator(fps, s, 0), e0).squaredNorm(), 0.5, 1e-15);
}

TEST(DecoherenceFunctional, Examples) {
    const HistoryOperator identity{};
    EXPECT_NEAR(std::abs(decoherence_functional(identity, identity, plus) - 1.0), 0.0, 1e-15);
    const auto s = HamiltonianSchedule::constant(pauli_x(), 0, 1);
    const auto ca = history_operator(std::vector<FixedPoint>{FixedPoint(0, e0), FixedPoint(1, e0)}, s, 0);
    const auto cb = history_operator(std::vector<FixedPoint>{FixedPoint(0, e0), FixedPoint(1, e1)}, s, 0);
    EXPECT_LT(std::abs(decoherence_functional(ca, cb, e0)), 1e-15);
}

TEST(ChainProbability, Examples) {
    const auto s0 = HamiltonianSchedule::zero(2, 0, 1);
    const Matrix rho = projector(e0);
    EXPECT_NEAR(chain_probability(std::vector<FixedPoint>{FixedPoint(0, e0), FixedPoint(1, e0)}, s0, rho), 1.0, 1e-15);
    const auto s = HamiltonianSchedule::constant(pauli_x(), 0, pi / 4);
    EXPECT_NEAR(chain_probability(std::vector<FixedPoint>{FixedPoint(0, e0), FixedPoint(pi / 4, e0)}, s, rho), 0.5,
                1e-15);
}

TEST(ChainProbability, InvalidDensityMatrix) {
    const auto s0 = HamiltonianSchedule::zero(2, 0, 1);
    const std::vector<FixedPoint> fps{FixedPoint(0, e0), FixedPoint(1, e0)};
    EXPECT_THROW(chain_probability(fps, s0, Matrix(2.0 * projector(e0))), ValidationError);
    Matrix negative(2, 2);
    negative << 1.5, 0, 0, -0.5;
    EXPECT_THROW(chain_probability(fps, s0, negative), ValidationError);
}

TEST(ChainProbability, SumsToOneOverFinalBasis) {
    SplitMix64 rng(22);
    for (int trial = 0; trial < 200; ++trial) {
        const auto d = 1 + static_cast<Eigen::Index>(rng.below(6));
        const auto grid = random_grid(rng, 2);
        const auto s = random_schedule_over(rng, d, grid);
        const StateVector psi = random_state(rng, d);
        double sum = 0.0;
        for (const auto& b : random_basis(rng, d)) {
            sum += chain_probability(std::vector<FixedPoint>{FixedPoint(grid[0], psi), FixedPoint(grid[1], b)}, s,
                                     projector(psi));
        }
        EXPECT_NEAR(sum, 1.0, 1e-10);
    }
}

TEST(DecoherenceFunctional, DiagonalMatchesChainAndRecordNorm) {
    SplitMix64 rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const auto d = 1 + static_cast<Eigen::Index>(rng.below(4));
        const auto grid = random_grid(rng, 2 + rng.below(3));
        const auto s = random_schedule_over(rng, d, grid);
        const StateVector psi = random_state(rng, d);
        std::vector<FixedPoint> fps{FixedPoint(grid[0], psi)};
        for (std::size_t i = 1; i < grid.size(); ++i) fps.emplace_back(grid[i], random_state(rng, d));
        const auto c = history_operator(fps, s, grid[0]);
        const Complex dd = decoherence_functional(c, c, psi);
        EXPECT_LE(std::abs(dd.imag()), 1e-12);
        EXPECT_NEAR(record_state(c, psi).squaredNorm(), dd.real(), 1e-10);
        EXPECT_NEAR(chain_probability(fps, s, projector(psi)), dd.real(), 1e-10);
        EXPECT_NEAR(oracle_chain(fps, s, psi), dd.real(), 1e-10);
    }
}

TEST(IsDecoherentSpace, SingleTimeBasisIsDecoherent) {
    SplitMix64 rng(24);
    const auto s = HamiltonianSchedule::constant(random_hermitian(rng, 3), 0, 1);
    const StateVector psi = random_state(rng, 3);
    std::vector<QuantumHistory> hs;
    for (const auto& b : random_basis(rng, 3)) hs.emplace_back(std::vector<FixedPoint>{FixedPoint(0, psi), FixedPoint(1, b)});
    EXPECT_TRUE(is_decoherent_space(HistoryFamily(hs, {0.0}), s, psi).decoherent);
}

TEST(IsDecoherentSpace, NonCommutingProjectorsInterfere) {
    // |+>,|-> at t=1 followed by |0>,|1> at t=2 from |0>; the two histories
    // ending in |0> overlap with D = 1/4.
    const auto s = HamiltonianSchedule::zero(2, 0, 2);
    std::vector<QuantumHistory> hs;
    for (const auto& mid : {plus, minus}) {
        for (const auto& last : {e0, e1}) {
            hs.emplace_back(std::vector<FixedPoint>{FixedPoint(0, e0), FixedPoint(1, mid), FixedPoint(2, last)});
        }
    }
    const HistoryFamily fam(hs, {0.0});
    EXPECT_TRUE(validate_family(fam).valid);
    const auto r = is_decoherent_space(fam, s, e0);
    EXPECT_FALSE(r.decoherent);
    EXPECT_NEAR(r.max_off_diagonal, 0.25, 1e-15);
    ASSERT_TRUE(r.worst_pair.has_value());
}

TEST(IsDecoherentSpace, SingleMemberIsVacuouslyDecoherent) {
    const auto s = HamiltonianSchedule::zero(2, 0, 1);
    const auto r = is_decoherent_space(HistoryFamily({two_point(e0, plus)}, {0.0}), s, e0);
    EXPECT_TRUE(r.decoherent);
    EXPECT_EQ(r.max_off_diagonal, 0.0);
}

TEST(EnumerateFamily, CountsAndGuard) {
    const auto b2 = computational_basis(2);
    FamilyLayout layout{TimeGrid({0.0, 1.0, 2.0}), {b2, b2, b2}, {{0, e0}}};
    const auto ef = enumerate_family(layout);
    EXPECT_EQ(ef.family.size(), 4u);
    EXPECT_EQ(ef.indices[0], (std::vector<int>{-1, 0, 0}));
    EXPECT_EQ(ef.indices[1], (std::vector<int>{-1, 0, 1}));
    EXPECT_EQ(ef.family[3].id(), "t0:c t1:1 t2:1");
    EXPECT_THROW(enumerate_family(layout, 3), CombinatorialLimitError);
}

TEST(EnumerateFamily, RejectsIncompleteBasis) {
    FamilyLayout layout{TimeGrid({0.0, 1.0}), {computational_basis(2), {e0}}, {{0, e0}}};
    EXPECT_THROW(enumerate_family(layout), ValidationError);
}
