#include "focklaser/exact.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace focklaser::exact {

int required_fock_dimension(double g) {
    return static_cast<int>(std::ceil(4.0 * g * g + 10.0 * (2.0 * g) + 20.0));
}

void check_support(const TruncatedBasis& basis, double g) {
    const int need = required_fock_dimension(g);
    if (basis.n_fock < need) {
        throw ValidationError("truncated basis n_fock=" + std::to_string(basis.n_fock) +
                              " violates the support rule for g=" + std::to_string(g) +
                              " (need >= " + std::to_string(need) + ")");
    }
}

Matrix<double> annihilation(int n_fock) {
    Matrix<double> a = Matrix<double>::Zero(n_fock, n_fock);
    for (int n = 1; n < n_fock; ++n) {
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    return a;
}

Matrix<double> displacement(int n_fock, double z) {
    const Matrix<double> a = annihilation(n_fock);
    const Matrix<double> generator = z * (a.transpose() - a);
    return generator.exp();
}

namespace {

RealOperator make_operator(const TruncatedBasis& basis, Matrix<double> m, bool hermitian) {
    RealOperator op;
    op.matrix = std::move(m);
    op.basis = basis;
    op.hermitian = hermitian;
    return op;
}

Matrix<double> qubit_kron(const Eigen::Matrix2d& q, const Matrix<double>& field) {
    const auto nf = field.rows();
    Matrix<double> out = Matrix<double>::Zero(2 * nf, 2 * nf);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            if (q(i, j) != 0.0) {
                out.block(i * nf, j * nf, nf, nf) = q(i, j) * field;
            }
        }
    }
    return out;
}

double tail_mass(const Eigen::Ref<const Vector<double>>& v, int n_fock, int levels) {
    double mass = 0.0;
    const int from = std::max(0, n_fock - levels);
    const auto qubits = v.size() / n_fock;
    for (Eigen::Index q = 0; q < qubits; ++q) {
        mass += v.segment(q * n_fock + from, n_fock - from).squaredNorm();
    }
    return mass;
}

} // namespace

RealOperator field_a(const TruncatedBasis& basis) {
    return make_operator(basis, qubit_kron(Eigen::Matrix2d::Identity(), annihilation(basis.n_fock)), false);
}

RealOperator sigma_x(const TruncatedBasis& basis) {
    Eigen::Matrix2d sx;
    sx << 0, 1, 1, 0;
    return make_operator(basis, qubit_kron(sx, Matrix<double>::Identity(basis.n_fock, basis.n_fock)), true);
}

RealOperator sigma_z(const TruncatedBasis& basis) {
    Eigen::Matrix2d sz;
    sz << 1, 0, 0, -1;
    return make_operator(basis, qubit_kron(sz, Matrix<double>::Identity(basis.n_fock, basis.n_fock)), true);
}

RealOperator field_b(const TruncatedBasis& basis, double g) {
    RealOperator b = field_a(basis);
    b.matrix += g * sigma_x(basis).matrix;
    return b;
}

RealOperator field_quadrature(const TruncatedBasis& basis, const RabiParams& p, spectrum::FieldOperator op) {
    const RealOperator x = (op == spectrum::FieldOperator::APlusAdag) ? field_a(basis) : field_b(basis, p.g);
    return make_operator(basis, x.matrix + x.matrix.transpose(), true);
}

RealOperator build_rabi(const RabiParams& p, const TruncatedBasis& basis) {
    p.validate();
    check_support(basis, p.g);
    const Matrix<double> a = annihilation(basis.n_fock);
    const Matrix<double> num = a.transpose() * a;
    const Matrix<double> quad = a + a.transpose();
    Eigen::Matrix2d sx, sz;
    sx << 0, 1, 1, 0;
    sz << 1, 0, 0, -1;
    const Matrix<double> id = Matrix<double>::Identity(basis.n_fock, basis.n_fock);

    Matrix<double> h = qubit_kron(0.5 * p.omega0 * sz + 0.5 * p.lambda * sx, id);
    h += qubit_kron(Eigen::Matrix2d::Identity(), p.omega * num);
    h += qubit_kron(p.coupling() * sx, quad);

    RealOperator op = make_operator(basis, std::move(h), true);
    if (hermiticity_defect(op.matrix) >= 1e-12) {
        throw NumericalError("build_rabi: Hamiltonian is not Hermitian");
    }
    return op;
}

Vector<double> displaced_fock(int n, double z, int n_fock) {
    if (n < 0 || n >= n_fock) {
        throw ValidationError("displaced_fock: n outside the truncated basis");
    }
    // D'(z) = D(-z) = exp(-z (a' - a)).
    Vector<double> v = displacement(n_fock, -z).col(n);
    if (std::abs(v.norm() - 1.0) > 1e-8) {
        throw NumericalError("displaced_fock: state is not normalized");
    }
    const double loss = tail_mass(v, n_fock, 5);
    if (loss > 1e-6) {
        throw NumericalError("displaced_fock: truncation loss " + std::to_string(loss) +
                             " (increase n_fock)");
    }
    return v;
}

EigenSystem diagonalize(const RealOperator& h) {
    Eigen::SelfAdjointEigenSolver<Matrix<double>> solver(h.matrix);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("diagonalize: eigen decomposition failed");
    }
    EigenSystem es;
    es.values = solver.eigenvalues();
    es.vectors = solver.eigenvectors();
    es.labels.assign(static_cast<std::size_t>(es.values.size()), std::nullopt);
    es.basis = h.basis;

    const double scale = std::max(1.0, h.matrix.cwiseAbs().maxCoeff());
    const Matrix<double> residual = h.matrix * es.vectors - es.vectors * es.values.asDiagonal();
    const double worst = residual.colwise().norm().maxCoeff();
    if (worst > 1e-9 * scale * std::sqrt(static_cast<double>(h.matrix.rows()))) {
        throw NumericalError("diagonalize: eigenpair residual too large");
    }
    return es;
}

EigenSystem diagonalize_rabi(const RabiParams& p, const TruncatedBasis& basis, const DiagonalizeOptions& opts) {
    const RealOperator h = build_rabi(p, basis);
    EigenSystem es;
    if (p.lambda != 0.0) {
        es = diagonalize(h);
    } else {
        // Parity sigma_z (-1)^n commutes with H at lambda = 0.
        std::vector<Eigen::Index> even, odd;
        for (int q = 0; q < 2; ++q) {
            for (int n = 0; n < basis.n_fock; ++n) {
                const int parity = (q == 0 ? 1 : -1) * (n % 2 == 0 ? 1 : -1);
                (parity > 0 ? even : odd).push_back(basis.index(q, n));
            }
        }
        const auto dim = basis.dim();
        Vector<double> values(dim);
        Matrix<double> vectors = Matrix<double>::Zero(dim, dim);
        Eigen::Index col = 0;
        for (const auto* block : {&even, &odd}) {
            const auto m = static_cast<Eigen::Index>(block->size());
            Matrix<double> sub(m, m);
            for (Eigen::Index i = 0; i < m; ++i) {
                for (Eigen::Index j = 0; j < m; ++j) {
                    sub(i, j) = h.matrix((*block)[i], (*block)[j]);
                }
            }
            RealOperator sub_op;
            sub_op.matrix = std::move(sub);
            sub_op.hermitian = true;
            const EigenSystem part = diagonalize(sub_op);
            for (Eigen::Index k = 0; k < m; ++k, ++col) {
                values(col) = part.values(k);
                for (Eigen::Index i = 0; i < m; ++i) {
                    vectors((*block)[i], col) = part.vectors(i, k);
                }
            }
        }
        std::vector<Eigen::Index> order(static_cast<std::size_t>(dim));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto l, auto r) { return values(l) < values(r); });
        es.values.resize(dim);
        es.vectors.resize(dim, dim);
        for (Eigen::Index k = 0; k < dim; ++k) {
            es.values(k) = values(order[k]);
            es.vectors.col(k) = vectors.col(order[k]);
        }
        es.labels.assign(static_cast<std::size_t>(dim), std::nullopt);
        es.basis = basis;
    }
    for (int k = 0; k < std::min<int>(opts.check_count, static_cast<int>(es.size())); ++k) {
        const double mass = tail_mass(es.vectors.col(k), basis.n_fock, 5);
        if (mass > opts.tail_tolerance) {
            throw NumericalError("diagonalize_rabi: eigenvector " + std::to_string(k) + " has tail mass " +
                                 std::to_string(mass) + " in the top Fock levels (increase n_fock)");
        }
    }
    return es;
}

namespace {

// Template |n, sigma> from precomputed D(g) (columns D(g)|n>) and D'(g).
Vector<double> analytic_state_from(int n, SpinBranch sigma, const RabiParams& p, const TruncatedBasis& basis,
                                   const Matrix<double>& d_plus, const Matrix<double>& d_minus) {
    const double theta = spectrum::mixing_angle(n, p);
    double c_plus = 0.0, c_minus = 0.0;  // weights of D'(g)|+x,n> and D(g)|-x,n>
    if (sigma == SpinBranch::Plus) {
        c_plus = std::cos(theta / 2.0);
        c_minus = std::sin(theta / 2.0);
    } else {
        c_plus = std::sin(theta / 2.0);
        c_minus = -std::cos(theta / 2.0);
    }
    const Vector<double> left = d_minus.col(n);  // D'(g)|n>, displaced towards -g
    const Vector<double> right = d_plus.col(n);  // D(g)|n>
    const double r2 = std::sqrt(0.5);
    Vector<double> v(basis.dim());
    // |+x> = (|0> + |1>)/sqrt2, |-x> = (|0> - |1>)/sqrt2.
    v.segment(0, basis.n_fock) = r2 * (c_plus * left + c_minus * right);
    v.segment(basis.n_fock, basis.n_fock) = r2 * (c_plus * left - c_minus * right);
    return v;
}

} // namespace

Vector<double> analytic_state(int n, SpinBranch sigma, const RabiParams& p, const TruncatedBasis& basis) {
    if (n < 0 || n >= basis.n_fock) {
        throw ValidationError("analytic_state: n outside the truncated basis");
    }
    const Matrix<double> d_plus = displacement(basis.n_fock, p.g);
    const Matrix<double> d_minus = d_plus.transpose();
    return analytic_state_from(n, sigma, p, basis, d_plus, d_minus);
}

EigenSystem label_eigenstates(EigenSystem es, const RabiParams& p, const LabelOptions& opts) {
    const TruncatedBasis& basis = es.basis;
    const Matrix<double> d_plus = displacement(basis.n_fock, p.g);
    const Matrix<double> d_minus = d_plus.transpose();

    int n_max = opts.n_template_max;
    if (n_max < 0) {
        n_max = -1;
        for (int n = 0; n < basis.n_fock; ++n) {
            const double loss = std::max(tail_mass(d_plus.col(n), basis.n_fock, 5),
                                         tail_mass(d_minus.col(n), basis.n_fock, 5));
            if (loss > 1e-10) {
                break;
            }
            n_max = n;
        }
    }
    const int count = 2 * (n_max + 1);
    if (count <= 0) {
        return es;
    }
    Matrix<double> templates(basis.dim(), count);
    std::vector<Label> meta(static_cast<std::size_t>(count));
    for (int n = 0, c = 0; n <= n_max; ++n) {
        for (SpinBranch s : {SpinBranch::Minus, SpinBranch::Plus}) {
            templates.col(c) = analytic_state_from(n, s, p, basis, d_plus, d_minus);
            meta[c] = Label{n, s, 0.0};
            ++c;
        }
    }
    const Matrix<double> overlaps = (es.vectors.transpose() * templates).cwiseAbs2();
    es.labels.assign(static_cast<std::size_t>(es.size()), std::nullopt);
    for (Eigen::Index k = 0; k < es.size(); ++k) {
        Eigen::Index best = 0;
        const double value = overlaps.row(k).maxCoeff(&best);
        if (value >= opts.threshold) {
            Label lb = meta[best];
            lb.overlap = value;
            es.labels[k] = lb;
        }
    }
    return es;
}

RealOperator positive_frequency_part(const RealOperator& j, const EigenSystem& es, double tie_tolerance) {
    const Matrix<double> j_eig = es.vectors.transpose() * j.matrix * es.vectors;
    const Matrix<double> plus = positive_frequency_part_eigen<double>(j_eig, es.values, tie_tolerance);
    return make_operator(j.basis, es.vectors * plus * es.vectors.transpose(), false);
}

} // namespace focklaser::exact
