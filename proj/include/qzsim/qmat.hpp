#pragma once

// Dense complex linear algebra for 1-3 qubit registers.
//
// Everything here is fixed-capacity (dims 2, 4, 8) and allocation-free:
// the register sizes in this simulator never exceed three qubits, so a
// general tensor engine would be pure overhead.  Matrix exponentials are
// only provided in the closed Pauli-string form exp(-i a P / 2) with
// P^2 = I; all generators used by the channel maps are of that shape.

#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace qzsim {

using cx = std::complex<double>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

// Raised by channel maps and matrix ops on contract violations that can only
// be detected at run time (dimension mismatch, rate overflow, ...).
struct SimulationError : std::runtime_error {
    explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a configuration or input file is structurally valid but
// semantically wrong (bad key, misaligned grid, non-normalized amplitudes).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Step-validation switch (the CLI's --validate).  Read-only during runs, so
// sharing it between parallel sweeps is safe.
// ---------------------------------------------------------------------------

inline std::atomic<bool>& validation_flag() {
    static std::atomic<bool> flag{false};
    return flag;
}
inline void set_validation(bool on) { validation_flag().store(on); }
inline bool validation_enabled() { return validation_flag().load(); }

// ---------------------------------------------------------------------------
// Mat: dense row-major complex matrix, dim in {2, 4, 8}
// ---------------------------------------------------------------------------

class Mat {
  public:
    static constexpr int kMaxDim = 8;

    Mat() = default;
    explicit Mat(int dim) : n_(check_dim(dim)) {}
    Mat(int dim, std::initializer_list<cx> entries) : n_(check_dim(dim)) {
        if (static_cast<int>(entries.size()) != n_ * n_)
            throw SimulationError("Mat: initializer size does not match dim*dim");
        int i = 0;
        for (const cx& e : entries) a_[i++] = e;
    }

    static Mat identity(int dim) {
        Mat m(dim);
        for (int i = 0; i < dim; ++i) m.at(i, i) = 1.0;
        return m;
    }

    int dim() const { return n_; }

    cx& at(int r, int c) { return a_[r * n_ + c]; }
    const cx& at(int r, int c) const { return a_[r * n_ + c]; }
    cx operator()(int r, int c) const { return a_[r * n_ + c]; }

    Mat operator+(const Mat& o) const {
        require_same_dim(o);
        Mat r(n_);
        for (int i = 0; i < n_ * n_; ++i) r.a_[i] = a_[i] + o.a_[i];
        return r;
    }
    Mat operator-(const Mat& o) const {
        require_same_dim(o);
        Mat r(n_);
        for (int i = 0; i < n_ * n_; ++i) r.a_[i] = a_[i] - o.a_[i];
        return r;
    }
    Mat operator*(const Mat& o) const {
        require_same_dim(o);
        Mat r(n_);
        for (int i = 0; i < n_; ++i)
            for (int k = 0; k < n_; ++k) {
                const cx aik = a_[i * n_ + k];
                if (aik == cx{}) continue;
                for (int j = 0; j < n_; ++j) r.a_[i * n_ + j] += aik * o.a_[k * n_ + j];
            }
        return r;
    }
    friend Mat operator*(cx s, const Mat& m) {
        Mat r(m.n_);
        for (int i = 0; i < m.n_ * m.n_; ++i) r.a_[i] = s * m.a_[i];
        return r;
    }
    friend Mat operator*(double s, const Mat& m) { return cx(s, 0.0) * m; }

    Mat adjoint() const {
        Mat r(n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) r.at(i, j) = std::conj(at(j, i));
        return r;
    }

    cx trace() const {
        cx t{};
        for (int i = 0; i < n_; ++i) t += at(i, i);
        return t;
    }

    double max_abs() const {
        double m = 0.0;
        for (int i = 0; i < n_ * n_; ++i) m = std::max(m, std::abs(a_[i]));
        return m;
    }

    double max_abs_diff(const Mat& o) const {
        require_same_dim(o);
        double m = 0.0;
        for (int i = 0; i < n_ * n_; ++i) m = std::max(m, std::abs(a_[i] - o.a_[i]));
        return m;
    }

    double hermiticity_defect() const {
        double m = 0.0;
        for (int i = 0; i < n_; ++i)
            for (int j = i; j < n_; ++j)
                m = std::max(m, std::abs(at(i, j) - std::conj(at(j, i))));
        return m;
    }

    void symmetrize() {
        for (int i = 0; i < n_; ++i)
            for (int j = i; j < n_; ++j) {
                const cx h = 0.5 * (at(i, j) + std::conj(at(j, i)));
                at(i, j) = h;
                at(j, i) = std::conj(h);
            }
    }

  private:
    static int check_dim(int dim) {
        if (dim != 2 && dim != 4 && dim != 8)
            throw SimulationError("Mat: dim must be 2, 4 or 8, got " + std::to_string(dim));
        return dim;
    }
    void require_same_dim(const Mat& o) const {
        if (n_ != o.n_) throw SimulationError("Mat: dimension mismatch");
    }

    int n_ = 2;
    std::array<cx, kMaxDim * kMaxDim> a_{};
};

// ---------------------------------------------------------------------------
// Pauli basis and common states
// ---------------------------------------------------------------------------

inline const Mat& sigma0() {
    static const Mat m(2, {1, 0, 0, 1});
    return m;
}
inline const Mat& sigma_x() {
    static const Mat m(2, {0, 1, 1, 0});
    return m;
}
inline const Mat& sigma_y() {
    static const Mat m(2, {0, cx(0, -1), cx(0, 1), 0});
    return m;
}
inline const Mat& sigma_z() {
    static const Mat m(2, {1, 0, 0, -1});
    return m;
}

inline const Mat& proj0() {  // |0><0|
    static const Mat m(2, {1, 0, 0, 0});
    return m;
}
inline const Mat& proj1() {  // |1><1|
    static const Mat m(2, {0, 0, 0, 1});
    return m;
}
inline const Mat& proj_plus() {  // |+><+|
    static const Mat m(2, {0.5, 0.5, 0.5, 0.5});
    return m;
}
inline const Mat& proj_minus() {  // |-><-|
    static const Mat m(2, {0.5, -0.5, -0.5, 0.5});
    return m;
}
inline const Mat& mixed2() {  // sigma_0 / 2
    static const Mat m(2, {0.5, 0, 0, 0.5});
    return m;
}

enum class Pauli : std::uint8_t { I, X, Y, Z };

inline const Mat& pauli_matrix(Pauli p) {
    switch (p) {
        case Pauli::I: return sigma0();
        case Pauli::X: return sigma_x();
        case Pauli::Y: return sigma_y();
        case Pauli::Z: return sigma_z();
    }
    throw SimulationError("pauli_matrix: bad label");
}

// ---------------------------------------------------------------------------
// Core operations
// ---------------------------------------------------------------------------

inline Mat kron(const Mat& a, const Mat& b) {
    const int na = a.dim(), nb = b.dim();
    if (na * nb > Mat::kMaxDim)
        throw SimulationError("kron: product dim " + std::to_string(na * nb) + " exceeds 8");
    Mat r(na * nb);
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < na; ++j) {
            const cx aij = a(i, j);
            if (aij == cx{}) continue;
            for (int k = 0; k < nb; ++k)
                for (int l = 0; l < nb; ++l) r.at(i * nb + k, j * nb + l) = aij * b(k, l);
        }
    return r;
}

// Ad(u, rho) = u rho u^dagger.  u need not be unitary.
inline Mat ad(const Mat& u, const Mat& rho) {
    if (u.dim() != rho.dim()) throw SimulationError("ad: dimension mismatch");
    return u * rho * u.adjoint();
}

// Tr(obs . rho)
inline cx expect(const Mat& obs, const Mat& rho) {
    if (obs.dim() != rho.dim()) throw SimulationError("expect: dimension mismatch");
    cx t{};
    const int n = obs.dim();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t += obs(i, j) * rho(j, i);
    return t;
}

// Partial trace keeping the listed qubits (qubit 0 = leftmost tensor factor).
// Kept qubits retain their relative order.
inline Mat ptrace(const Mat& rho, const std::vector<int>& keep) {
    const int n = rho.dim();
    if (n < 4) throw SimulationError("ptrace: input must have at least 2 qubits");
    const int nq = (n == 4) ? 2 : 3;
    unsigned keep_mask = 0;
    for (int q : keep) {
        if (q < 0 || q >= nq) throw SimulationError("ptrace: qubit index out of range");
        keep_mask |= 1u << (nq - 1 - q);
    }
    int nk = 0;
    for (int q = 0; q < nq; ++q)
        if (keep_mask & (1u << (nq - 1 - q))) ++nk;
    if (nk == 0 || nk == nq) throw SimulationError("ptrace: must keep a strict subset of qubits");

    const int rdim = 1 << nk;
    Mat r(rdim);
    // compress the kept bits of a full index into a reduced index
    auto reduce = [&](int idx) {
        int out = 0;
        for (int q = 0; q < nq; ++q) {
            const unsigned bit = 1u << (nq - 1 - q);
            if (keep_mask & bit) out = (out << 1) | ((idx & bit) ? 1 : 0);
        }
        return out;
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const unsigned trace_mask = ~keep_mask & ((1u << nq) - 1);
            if ((static_cast<unsigned>(i) & trace_mask) != (static_cast<unsigned>(j) & trace_mask))
                continue;
            r.at(reduce(i), reduce(j)) += rho(i, j);
        }
    return r;
}

struct PauliString {
    std::vector<Pauli> factors;  // one per qubit, qubit 0 first

    Mat matrix() const {
        if (factors.empty() || factors.size() > 3)
            throw SimulationError("PauliString: need 1 to 3 factors");
        Mat m = pauli_matrix(factors[0]);
        for (std::size_t i = 1; i < factors.size(); ++i) m = kron(m, pauli_matrix(factors[i]));
        return m;
    }
};

// exp(-i angle P / 2) = cos(angle/2) I - i sin(angle/2) P, valid for P^2 = I.
inline Mat pauli_exp(const Mat& p, double angle) {
    if (validation_enabled()) {
        if ((p * p).max_abs_diff(Mat::identity(p.dim())) > 1e-12)
            throw SimulationError("pauli_exp: generator does not square to identity");
    }
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    Mat r = c * Mat::identity(p.dim());
    r = r - (cx(0, s) * p);
    return r;
}

inline Mat pauli_exp(const PauliString& p, double angle) { return pauli_exp(p.matrix(), angle); }

// Bloch vector (Tr sigma_x rho, Tr sigma_y rho, Tr sigma_z rho) of a dim-2 state.
inline std::array<double, 3> bloch(const Mat& rho) {
    if (rho.dim() != 2) throw SimulationError("bloch: dim-2 input required");
    return {expect(sigma_x(), rho).real(), expect(sigma_y(), rho).real(),
            expect(sigma_z(), rho).real()};
}

// ---------------------------------------------------------------------------
// Hermitian eigensolver (cyclic Jacobi).  Dims <= 8, so no pivoting finesse.
// ---------------------------------------------------------------------------

struct EigH {
    std::array<double, Mat::kMaxDim> values{};  // ascending, first dim() valid
    Mat vectors;                                // columns are eigenvectors
};

inline EigH eigh(const Mat& m) {
    const int n = m.dim();
    Mat a = m;
    a.symmetrize();
    Mat v = Mat::identity(n);

    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += std::norm(a(p, q));
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                const cx apq = a(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                // J = [[c, -s e^{i phi}], [s e^{-i phi}, c]] zeroes a_pq
                const cx phase = std::exp(cx(0, std::arg(apq)));
                const double theta = 0.5 * std::atan2(2.0 * std::abs(apq), app - aqq);
                const double c = std::cos(theta);
                const double s = std::sin(theta);
                for (int i = 0; i < n; ++i) {  // right-multiply a and v by J
                    const cx aip = a(i, p), aiq = a(i, q);
                    a.at(i, p) = c * aip + s * std::conj(phase) * aiq;
                    a.at(i, q) = -s * phase * aip + c * aiq;
                    const cx vip = v(i, p), viq = v(i, q);
                    v.at(i, p) = c * vip + s * std::conj(phase) * viq;
                    v.at(i, q) = -s * phase * vip + c * viq;
                }
                for (int j = 0; j < n; ++j) {  // left-multiply a by J^dagger
                    const cx apj = a(p, j), aqj = a(q, j);
                    a.at(p, j) = c * apj + s * phase * aqj;
                    a.at(q, j) = -s * std::conj(phase) * apj + c * aqj;
                }
            }
    }

    EigH e;
    e.vectors = v;
    std::array<int, Mat::kMaxDim> order{};
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (a(order[j], order[j]).real() < a(order[i], order[i]).real())
                std::swap(order[i], order[j]);
    Mat sorted(n);
    for (int i = 0; i < n; ++i) {
        e.values[i] = a(order[i], order[i]).real();
        for (int r = 0; r < n; ++r) sorted.at(r, i) = v(r, order[i]);
    }
    e.vectors = sorted;
    return e;
}

inline double min_eigenvalue(const Mat& m) { return eigh(m).values[0]; }

// Uhlmann fidelity F(rho, sigma) = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
inline double fidelity(const Mat& rho, const Mat& sigma) {
    if (rho.dim() != sigma.dim()) throw SimulationError("fidelity: dimension mismatch");
    const EigH er = eigh(rho);
    const int n = rho.dim();
    Mat sqrt_rho(n);
    for (int k = 0; k < n; ++k) {
        const double lam = std::max(er.values[k], 0.0);
        const double sq = std::sqrt(lam);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                sqrt_rho.at(i, j) += sq * er.vectors(i, k) * std::conj(er.vectors(j, k));
    }
    const Mat inner = sqrt_rho * sigma * sqrt_rho;
    const EigH ei = eigh(inner);
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += std::sqrt(std::max(ei.values[k], 0.0));
    return s * s;
}

// ---------------------------------------------------------------------------
// Density: a Mat with the state-matrix contract attached
// ---------------------------------------------------------------------------

class Density {
  public:
    static constexpr double kHermTol = 1e-10;
    static constexpr double kTraceTol = 1e-9;
    static constexpr double kEigTol = -1e-9;

    Density() : m_(Mat::identity(2)) { m_ = 0.5 * m_; }
    explicit Density(Mat m) : m_(std::move(m)) {
        if (validation_enabled()) check();
    }

    const Mat& mat() const { return m_; }
    int dim() const { return m_.dim(); }

    // Hermiticity and unit trace; positivity is on demand (it costs an eigh).
    void check() const {
        const double h = m_.hermiticity_defect();
        if (h > kHermTol)
            throw ValidationError("Density: hermiticity defect " + std::to_string(h));
        const cx t = m_.trace();
        if (std::abs(t.imag()) > kTraceTol || std::abs(t.real() - 1.0) > kTraceTol)
            throw ValidationError("Density: trace deviates from 1");
    }
    bool positive(double tol = kEigTol) const { return min_eigenvalue(m_) >= tol; }

    void resymmetrize_if_drifted() {
        if (m_.hermiticity_defect() > kHermTol) m_.symmetrize();
    }

  private:
    Mat m_;
};

}  // namespace qzsim
