#include "focklaser/liouvillian.hpp"

#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

namespace focklaser::liouvillian {

namespace {

using Triplet = Eigen::Triplet<Complex>;

SparseC to_sparse(const Matrix<Complex>& m, double drop) {
    std::vector<Triplet> t;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (std::abs(m(i, j)) > drop) {
                t.emplace_back(i, j, m(i, j));
            }
        }
    }
    SparseC s(m.rows(), m.cols());
    s.setFromTriplets(t.begin(), t.end());
    return s;
}

SparseC identity(Eigen::Index n) {
    SparseC s(n, n);
    s.setIdentity();
    return s;
}

// Rabi eigensystem with a bare truncation large enough that the kept vectors have no tail.
exact::EigenSystem rabi_eigensystem(const RabiParams& p, int K, int n_fock) {
    int nf = n_fock > 0 ? n_fock : exact::required_fock_dimension(p.g) + K;
    exact::DiagonalizeOptions dopts;
    dopts.check_count = K;
    for (int attempt = 0;; ++attempt) {
        exact::TruncatedBasis basis{nf};
        try {
            exact::EigenSystem es = exact::diagonalize_rabi(p, basis, dopts);
            return exact::label_eigenstates(std::move(es), p);
        } catch (const NumericalError&) {
            if (n_fock > 0 || attempt >= 4) {
                throw;
            }
            nf = nf + nf / 2;
        }
    }
}

std::size_t superoperator_nnz(const SparseC& h, const std::vector<Dissipator>& ds, Eigen::Index d) {
    std::size_t nnz = 2 * static_cast<std::size_t>(d) * h.nonZeros();
    for (const auto& diss : ds) {
        const SparseC odo = SparseC(diss.op.adjoint()) * diss.op;
        const auto o = static_cast<std::size_t>(diss.op.nonZeros());
        nnz += o * o + 2 * static_cast<std::size_t>(d) * odo.nonZeros();
    }
    return nnz;
}

} // namespace

LiouvillianModel build_model(const RabiParams& p, const GainParams& gp, const LiouvillianOptions& opts) {
    p.validate();
    gp.validate(p);
    if (opts.n_levels < 1) {
        throw ValidationError("liouvillian: n_levels must be >= 1");
    }
    if (opts.n_fock > 0) {
        exact::check_support(exact::TruncatedBasis{opts.n_fock}, p.g);
    }
    LiouvillianModel m;
    m.p = p;
    m.gp = gp;
    m.opts = opts;
    m.K = 2 * opts.n_levels;
    const int K = m.K;
    const Eigen::Index D = 2 * static_cast<Eigen::Index>(K);

    // Rough budget from the superoperator size alone, before any diagonalization.
    const std::size_t floor_bytes = static_cast<std::size_t>(D) * D * D * 2 * (sizeof(Complex) + sizeof(int));
    if (floor_bytes > opts.memory_budget) {
        throw ValidationError("liouvillian: n_levels=" + std::to_string(opts.n_levels) +
                              " exceeds the memory budget of " + std::to_string(opts.memory_budget) + " bytes");
    }

    m.es = rabi_eigensystem(p, K, opts.n_fock);
    if (m.es.size() < K) {
        throw ValidationError("liouvillian: bare truncation smaller than the kept eigenstates");
    }
    const Matrix<double> V = m.es.vectors.leftCols(K);
    const Vector<double> E = m.es.values.head(K).array() - m.es.values(0);

    auto field = [&](Field f) {
        const auto op = f == Field::A ? spectrum::FieldOperator::APlusAdag : spectrum::FieldOperator::BPlusBdag;
        const exact::RealOperator x = exact::field_quadrature(m.es.basis, p, op);
        return Matrix<double>(V.transpose() * x.matrix * V);
    };
    const Matrix<double> x_int = field(opts.interaction);
    const Matrix<double> x_jump = opts.jump == opts.interaction ? x_int : field(opts.jump);
    const double drop = 1e-14 * std::max(1.0, x_int.cwiseAbs().maxCoeff());

    const Matrix<Complex> jump_plus =
        exact::positive_frequency_part_eigen<double>(x_jump, E, opts.tie_tolerance).cast<Complex>();

    const double omega_em = p.omega * (1.0 + gp.delta);
    m.energies.resize(D);
    m.energies << E.array() - 0.5 * omega_em, E.array() + 0.5 * omega_em;

    Eigen::Matrix2cd sp, sm, sx;
    sp << 0, 0, 1, 0;  // |e><g| with index 0 = ground
    sm = sp.adjoint();
    sx = sp + sm;
    const Matrix<Complex> id_em = Matrix<Complex>::Identity(2, 2);
    const Matrix<Complex> id_k = Matrix<Complex>::Identity(K, K);

    Matrix<Complex> h = Matrix<Complex>::Zero(D, D);
    h.diagonal() = m.energies.cast<Complex>();
    if (opts.rwa) {
        const Matrix<Complex> x_plus =
            exact::positive_frequency_part_eigen<double>(x_int, E, opts.tie_tolerance).cast<Complex>();
        // Emitter up while the field steps down, and the reverse.
        h += gp.epsilon * (Matrix<Complex>(Eigen::kroneckerProduct(Matrix<Complex>(sp), x_plus)) +
                           Matrix<Complex>(Eigen::kroneckerProduct(Matrix<Complex>(sm), Matrix<Complex>(x_plus.adjoint()))));
    } else {
        h += gp.epsilon * Matrix<Complex>(Eigen::kroneckerProduct(Matrix<Complex>(sx), x_int.cast<Complex>().eval()));
    }
    m.H = to_sparse(h, drop * std::max(gp.epsilon, 1e-300));

    m.dissipators.push_back({"pump", to_sparse(Eigen::kroneckerProduct(Matrix<Complex>(sp), id_k), 0.0), gp.r});
    m.dissipators.push_back({"emitter_decay", to_sparse(Eigen::kroneckerProduct(Matrix<Complex>(sm), id_k), 0.0), gp.Gamma});
    m.dissipators.push_back({"cavity", to_sparse(Eigen::kroneckerProduct(id_em, jump_plus), drop), gp.kappa});

    const std::size_t nnz = superoperator_nnz(m.H, m.dissipators, D);
    m.memory_estimate = nnz * (sizeof(Complex) + sizeof(int)) * 4;
    if (m.memory_estimate > opts.memory_budget) {
        throw ValidationError("liouvillian: estimated " + std::to_string(m.memory_estimate) +
                              " bytes exceeds the memory budget of " + std::to_string(opts.memory_budget));
    }

    // vec(A rho B) = (B^T kron A) vec(rho), column-major.
    const SparseC I = identity(D);
    const Complex minus_i(0.0, -1.0);
    SparseC L = minus_i * (SparseC(Eigen::kroneckerProduct(I, m.H)) -
                           SparseC(Eigen::kroneckerProduct(SparseC(m.H.transpose()), I)));
    for (const Dissipator& d : m.dissipators) {
        if (d.rate == 0.0) {
            continue;
        }
        const SparseC odo = SparseC(d.op.adjoint()) * d.op;
        const SparseC conj_op = d.op.conjugate();
        L += (0.5 * d.rate) * (2.0 * SparseC(Eigen::kroneckerProduct(conj_op, d.op)) -
                               SparseC(Eigen::kroneckerProduct(I, odo)) -
                               SparseC(Eigen::kroneckerProduct(SparseC(odo.transpose()), I)));
    }
    L.prune(Complex(0.0, 0.0), 0.0);
    L.makeCompressed();
    m.L = std::move(L);

    // vec(I)' L must vanish column by column.
    Vector<Complex> trace_row = Vector<Complex>::Zero(m.super_dim());
    for (Eigen::Index i = 0; i < D; ++i) {
        trace_row(i + D * i) = 1.0;
    }
    const Vector<Complex> defect = m.L.adjoint() * trace_row;
    m.trace_defect = defect.cwiseAbs().maxCoeff();
    if (m.trace_defect > 1e-9) {
        throw NumericalError("liouvillian: trace preservation violated (" + std::to_string(m.trace_defect) + ")");
    }
    return m;
}

Matrix<Complex> apply(const LiouvillianModel& model, const Matrix<Complex>& rho) {
    const Eigen::Index D = model.dim();
    if (rho.rows() != D || rho.cols() != D) {
        throw ValidationError("liouvillian: density matrix has the wrong size");
    }
    const Vector<Complex> v = Eigen::Map<const Vector<Complex>>(rho.data(), D * D);
    const Vector<Complex> out = model.L * v;
    return Eigen::Map<const Matrix<Complex>>(out.data(), D, D);
}

namespace {

// Exact block-diagonal inverse over groups of vec entries whose Bohr frequencies
// lie within the secular window of each other.
struct SecularBlocks {
    std::vector<std::vector<Eigen::Index>> members;
    std::vector<Eigen::PartialPivLU<Matrix<Complex>>> lu;

    Vector<Complex> apply(const Vector<Complex>& b) const {
        Vector<Complex> x(b.size());
        for (std::size_t c = 0; c < members.size(); ++c) {
            const auto& idx = members[c];
            Vector<Complex> local(static_cast<Eigen::Index>(idx.size()));
            for (std::size_t k = 0; k < idx.size(); ++k) {
                local(static_cast<Eigen::Index>(k)) = b(idx[k]);
            }
            const Vector<Complex> sol = lu[c].solve(local);
            for (std::size_t k = 0; k < idx.size(); ++k) {
                x(idx[k]) = sol(static_cast<Eigen::Index>(k));
            }
        }
        return x;
    }
};

class SecularPreconditioner {
public:
    SecularPreconditioner() = default;

    void set(std::shared_ptr<const SecularBlocks> blocks) { blocks_ = std::move(blocks); }

    template <typename M>
    SecularPreconditioner& analyzePattern(const M&) { return *this; }
    template <typename M>
    SecularPreconditioner& factorize(const M&) { return *this; }
    template <typename M>
    SecularPreconditioner& compute(const M&) { return *this; }

    template <typename Rhs>
    Vector<Complex> solve(const Rhs& b) const { return blocks_->apply(b); }

    Eigen::ComputationInfo info() { return Eigen::Success; }

private:
    std::shared_ptr<const SecularBlocks> blocks_;
};

std::shared_ptr<SecularBlocks> secular_blocks(const SparseC& A, const Vector<double>& energies, double window,
                                              std::size_t budget) {
    const Eigen::Index D = energies.size();
    const Eigen::Index N = D * D;
    std::vector<double> nu(static_cast<std::size_t>(N));
    for (Eigen::Index j = 0; j < D; ++j) {
        for (Eigen::Index i = 0; i < D; ++i) {
            nu[i + D * j] = energies(i) - energies(j);
        }
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return nu[a] < nu[b]; });

    auto blocks = std::make_shared<SecularBlocks>();
    std::vector<Eigen::Index> block_of(static_cast<std::size_t>(N));
    std::vector<Eigen::Index> local_of(static_cast<std::size_t>(N));
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (k == 0 || nu[order[k]] - nu[order[k - 1]] > window) {
            blocks->members.emplace_back();
        }
        const auto c = static_cast<Eigen::Index>(blocks->members.size() - 1);
        block_of[order[k]] = c;
        local_of[order[k]] = static_cast<Eigen::Index>(blocks->members.back().size());
        blocks->members.back().push_back(order[k]);
    }

    std::size_t bytes = 0;
    for (const auto& mem : blocks->members) {
        bytes += mem.size() * mem.size() * sizeof(Complex) * 2;
    }
    if (bytes > budget) {
        throw ValidationError("liouvillian: secular blocks need " + std::to_string(bytes) +
                              " bytes, above the memory budget (reduce secular_window)");
    }

    std::vector<Matrix<Complex>> dense(blocks->members.size());
    for (std::size_t c = 0; c < dense.size(); ++c) {
        const auto s = static_cast<Eigen::Index>(blocks->members[c].size());
        dense[c] = Matrix<Complex>::Zero(s, s);
    }
    for (Eigen::Index col = 0; col < A.outerSize(); ++col) {
        for (SparseC::InnerIterator it(A, col); it; ++it) {
            const Eigen::Index row = it.row();
            if (block_of[row] == block_of[col]) {
                dense[block_of[col]](local_of[row], local_of[col]) = it.value();
            }
        }
    }
    blocks->lu.reserve(dense.size());
    for (std::size_t c = 0; c < dense.size(); ++c) {
        blocks->lu.emplace_back(dense[c]);
    }
    return blocks;
}

SparseC bordered(const SparseC& L, Eigen::Index D, Eigen::Index row) {
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(L.nonZeros()) + static_cast<std::size_t>(D));
    for (Eigen::Index col = 0; col < L.outerSize(); ++col) {
        for (SparseC::InnerIterator it(L, col); it; ++it) {
            if (it.row() != row) {
                t.emplace_back(it.row(), col, it.value());
            }
        }
    }
    for (Eigen::Index i = 0; i < D; ++i) {
        t.emplace_back(row, i + D * i, 1.0);
    }
    SparseC A(L.rows(), L.cols());
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();
    return A;
}

Vector<Complex> solve_direct(const SparseC& A, const Vector<Complex>& b) {
    Eigen::SparseLU<SparseC> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) {
        throw NumericalError("liouvillian: sparse LU failed (degenerate null space?)");
    }
    Vector<Complex> x = lu.solve(b);
    x += lu.solve(b - A * x);
    return x;
}

} // namespace

SteadyStateResult steady_state(const LiouvillianModel& model, const SolveTolerances& tol) {
    const Eigen::Index D = model.dim();
    const Eigen::Index N = model.super_dim();
    NullSpaceMethod method = model.opts.method;
    if (method == NullSpaceMethod::Auto) {
        method = N <= model.opts.direct_limit ? NullSpaceMethod::Direct : NullSpaceMethod::Krylov;
    }

    SteadyStateResult res;
    res.method = method == NullSpaceMethod::Direct ? "direct" : "krylov";
    // Null vector with the equation for vec index `row` replaced by the trace.
    auto solve = [&](Eigen::Index row) -> Vector<Complex> {
        const SparseC A = bordered(model.L, D, row);
        Vector<Complex> b = Vector<Complex>::Zero(N);
        b(row) = 1.0;
        if (method == NullSpaceMethod::Direct) {
            return solve_direct(A, b);
        }
        auto blocks = secular_blocks(A, model.energies, model.opts.secular_window, model.opts.memory_budget);
        Eigen::GMRES<SparseC, SecularPreconditioner> gmres;
        gmres.preconditioner().set(blocks);
        gmres.set_restart(60);
        gmres.setMaxIterations(model.opts.max_iterations);
        gmres.setTolerance(model.opts.krylov_tolerance);
        gmres.compute(A);
        Vector<Complex> x = blocks->apply(b);
        for (int pass = 0; pass < 3; ++pass) {
            x = gmres.solveWithGuess(b, x);
            res.iterations += static_cast<int>(gmres.iterations());
            if (gmres.info() == Eigen::Success) {
                break;
            }
        }
        if (gmres.info() != Eigen::Success) {
            throw NumericalError("liouvillian: GMRES did not converge (error " + std::to_string(gmres.error()) + ")");
        }
        return x;
    };

    const Vector<Complex> x = solve(0);
    // Bordering on the most populated diagonal instead must reproduce the state;
    // a disagreement means the null space is (numerically) more than one-dimensional.
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < D; ++i) {
        if (std::abs(x(i + D * i)) > std::abs(x(best + D * best))) {
            best = i;
        }
    }
    if (best != 0) {
        res.null_space_gap = (x - solve(best + D * best)).cwiseAbs().maxCoeff();
        if (!(res.null_space_gap < tol.degeneracy)) {
            throw NumericalError("liouvillian: degenerate null space (borderings disagree by " +
                                 std::to_string(res.null_space_gap) + ")");
        }
    }

    double l_norm = 0.0;  // induced 1-norm
    for (Eigen::Index col = 0; col < model.L.outerSize(); ++col) {
        double s = 0.0;
        for (SparseC::InnerIterator it(model.L, col); it; ++it) {
            s += std::abs(it.value());
        }
        l_norm = std::max(l_norm, s);
    }
    res.residual = (model.L * x).cwiseAbs().maxCoeff() / std::max(l_norm, 1e-300);

    Matrix<Complex> rho = Eigen::Map<const Matrix<Complex>>(x.data(), D, D);
    res.hermiticity = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    res.trace = rho.trace().real();
    const Eigen::SelfAdjointEigenSolver<Matrix<Complex>> eig(rho, Eigen::EigenvaluesOnly);
    res.min_eigenvalue = eig.eigenvalues().minCoeff();
    res.rho = rho;
    const int K = model.K;
    res.rho_field = rho.topLeftCorner(K, K) + rho.bottomRightCorner(K, K);
    res.top_population = 0.0;
    for (int k = std::max(0, K - 4); k < K; ++k) {
        res.top_population += res.rho_field(k, k).real();
    }

    if (!(res.residual < tol.residual)) {
        throw NumericalError("liouvillian: steady-state residual " + std::to_string(res.residual));
    }
    if (!(res.hermiticity < tol.hermiticity)) {
        throw NumericalError("liouvillian: steady state is not Hermitian (" + std::to_string(res.hermiticity) + ")");
    }
    if (!(res.min_eigenvalue > tol.min_eigenvalue)) {
        throw NumericalError("liouvillian: steady state is not positive (" + std::to_string(res.min_eigenvalue) + ")");
    }
    if (std::abs(res.trace - 1.0) > 1e-9) {
        throw NumericalError("liouvillian: steady state trace " + std::to_string(res.trace));
    }
    if (res.top_population > tol.truncation) {
        throw NumericalError("liouvillian: population " + std::to_string(res.top_population) +
                             " in the highest kept levels (increase n_levels)");
    }
    return res;
}

Unpolarized extract_unpolarized(const Matrix<Complex>& rho_field, const exact::EigenSystem& es) {
    const Eigen::Index K = rho_field.rows();
    if (static_cast<Eigen::Index>(es.labels.size()) < K) {
        throw ValidationError("extract_unpolarized: eigensystem has fewer labels than the density matrix");
    }
    int n_top = 0;
    for (Eigen::Index k = 0; k < K; ++k) {
        if (es.labels[k]) {
            n_top = std::max(n_top, es.labels[k]->n);
        }
    }
    Unpolarized out;
    out.minus = Vector<double>::Zero(n_top + 1);
    out.plus = Vector<double>::Zero(n_top + 1);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double w = rho_field(k, k).real();
        if (!es.labels[k]) {
            out.residue += w;
            continue;
        }
        const auto& lb = *es.labels[k];
        (lb.sigma == SpinBranch::Minus ? out.minus : out.plus)(lb.n) += w;
    }
    out.flagged = out.residue > 1e-3;
    out.dist = laser_rate::make_distribution(out.minus + out.plus);
    return out;
}

Unpolarized extract_unpolarized(const SteadyStateResult& result, const LiouvillianModel& model) {
    return extract_unpolarized(result.rho_field, model.es);
}

double excited_population(const SteadyStateResult& result) {
    return 1.0 - result.rho(0, 0).real();
}

double off_diagonal_coherence(const SteadyStateResult& result, const LiouvillianModel& model) {
    double worst = 0.0;
    const int K = model.K;
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < K; ++l) {
            const auto& a = model.es.labels[k];
            const auto& b = model.es.labels[l];
            if (a && b && a->n != b->n) {
                worst = std::max(worst, std::abs(result.rho_field(k, l)));
            }
        }
    }
    return worst;
}

} // namespace focklaser::liouvillian
