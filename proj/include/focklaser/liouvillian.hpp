#pragma once

#include "focklaser/exact.hpp"
#include "focklaser/laser_rate.hpp"
#include "focklaser/types.hpp"

#include <Eigen/SparseCore>

#include <cstddef>
#include <string>
#include <vector>

// Driven-dissipative emitter + Rabi system, solved for the null vector of its
// Liouvillian. The Rabi part lives in its own lowest exact eigenstates, so the
// positive-frequency jump operator is exact within the kept subspace.
namespace focklaser::liouvillian {

using SparseC = Eigen::SparseMatrix<Complex>;

enum class Field { A, B };  // a + a' or b + b'

enum class NullSpaceMethod {
    Auto,    // Direct for small superoperators, Krylov otherwise
    Direct,  // sparse LU of the trace-bordered Liouvillian
    Krylov,  // GMRES preconditioned by the secular block structure
};

struct LiouvillianOptions {
    Field interaction = Field::B;
    Field jump = Field::B;
    bool rwa = true;
    int n_levels = 30;  // Rabi eigenstates kept per pseudo-spin branch
    int n_fock = 0;     // bare Fock truncation for the diagonalization; 0: automatic
    // Bohr-frequency gap (units of omega) separating secular blocks in the preconditioner.
    double secular_window = 0.1;
    std::size_t memory_budget = std::size_t{2} << 30;
    NullSpaceMethod method = NullSpaceMethod::Auto;
    Eigen::Index direct_limit = 5000;  // Auto switches to Krylov above this superoperator size
    double krylov_tolerance = 1e-14;
    int max_iterations = 2000;
    double tie_tolerance = exact::kDegeneracyTolerance;
};

struct Dissipator {
    std::string name;
    SparseC op;
    double rate = 0.0;
};

struct LiouvillianModel {
    RabiParams p;
    GainParams gp;
    LiouvillianOptions opts;
    exact::EigenSystem es;       // labeled Rabi eigensystem (all bare-basis eigenvectors)
    int K = 0;                   // kept Rabi eigenstates
    Vector<double> energies;     // composite energies, emitter slowest, size 2K
    SparseC H;                   // 2K x 2K
    std::vector<Dissipator> dissipators;
    SparseC L;                   // (2K)^2 x (2K)^2, column-major vec
    double trace_defect = 0.0;   // max |vec(I)' L|
    std::size_t memory_estimate = 0;  // bytes, checked against the budget before L is assembled

    Eigen::Index dim() const { return energies.size(); }
    Eigen::Index super_dim() const { return dim() * dim(); }
};

/// Builds H, the dissipators and the superoperator. Checks the memory budget first.
LiouvillianModel build_model(const RabiParams& p, const GainParams& gp, const LiouvillianOptions& opts = {});

/// Composite index of (emitter, Rabi eigenstate); emitter 0 is the ground state.
inline Eigen::Index composite_index(int emitter, int k, int K) { return static_cast<Eigen::Index>(emitter) * K + k; }

/// L(rho) applied to a density matrix, through the superoperator.
Matrix<Complex> apply(const LiouvillianModel& model, const Matrix<Complex>& rho);

struct SteadyStateResult {
    Matrix<Complex> rho;           // 2K x 2K
    Matrix<Complex> rho_field;     // emitter traced out, Rabi eigenbasis, K x K
    double residual = 0.0;         // |L vec(rho)|_inf / |L|_1
    double hermiticity = 0.0;      // max |rho - rho'| before symmetrization
    double min_eigenvalue = 0.0;
    double trace = 0.0;
    double top_population = 0.0;  // weight on the highest two kept photon levels
    double null_space_gap = 0.0;  // max difference between two trace borderings
    int iterations = 0;
    std::string method;
};

struct SolveTolerances {
    double residual = 1e-8;
    double hermiticity = 1e-9;
    double min_eigenvalue = -1e-8;
    double truncation = 1e-6;
    double degeneracy = 1e-6;  // borderings differing by more than this: degenerate null space
};

SteadyStateResult steady_state(const LiouvillianModel& model, const SolveTolerances& tol = {});

struct Unpolarized {
    laser_rate::PhotonDistribution dist;  // normalized over the labeled mass
    Vector<double> minus;                 // P(n, -1)
    Vector<double> plus;                  // P(n, +1)
    double residue = 0.0;                 // mass on unlabeled eigenstates
    bool flagged = false;                 // residue above 1e-3
};

/// P(n) = P(n, -1) + P(n, +1) from a field density matrix in the labeled eigenbasis.
Unpolarized extract_unpolarized(const Matrix<Complex>& rho_field, const exact::EigenSystem& es);
Unpolarized extract_unpolarized(const SteadyStateResult& result, const LiouvillianModel& model);

/// Population outside the global ground state (emitter ground, lowest Rabi eigenstate).
double excited_population(const SteadyStateResult& result);

/// Largest |rho_field(k, l)| between labeled states with different photon numbers.
double off_diagonal_coherence(const SteadyStateResult& result, const LiouvillianModel& model);

} // namespace focklaser::liouvillian
