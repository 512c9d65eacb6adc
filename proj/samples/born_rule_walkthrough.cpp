// Prepares a qubit in |0>, lets sigma_x act for pi/4 and measures in the
// computational basis. Prints Delta-Psi along both routes and the resulting
// measures of existence next to the textbook Born probabilities.

#include <cstdio>
#include <numbers>

#include "fpf/histories.hpp"
#include "fpf/measure.hpp"

int main() {
    using namespace fpf;
    Matrix sx(2, 2);
    sx << 0, 1, 1, 0;
    const double t2 = std::numbers::pi / 4;
    const auto sched = HamiltonianSchedule::constant(sx, 0.0, t2);

    const FamilyLayout layout{TimeGrid({0.0, t2}), {computational_basis(2), computational_basis(2)},
                              {{0, basis_state(2, 0)}}};
    const auto ef = enumerate_family(layout);
    const auto report = measure_report(ef, sched, default_steps_per_segment);

    const StateVector evolved = evolve_state(basis_state(2, 0), sched, 0.0, t2);
    std::printf("%-12s %-20s %-20s %-20s %-20s\n", "history", "delta_psi", "line_integral", "measure", "born");
    for (std::size_t i = 0; i < report.entries.size(); ++i) {
        const auto& e = report.entries[i];
        const double born = std::norm(inner(basis_state(2, static_cast<Eigen::Index>(i)), evolved));
        std::printf("%-12s %-20.15g %-20.15g %-20.15g %-20.15g\n", e.id.c_str(), e.delta_psi, *e.delta_psi_line,
                    e.measure, born);
    }
    return 0;
}
