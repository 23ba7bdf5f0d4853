#pragma once

// Brute-force reference simulator in a truncated number basis. Everything here
// is built from ladder operators and eigendecompositions, independent of the
// closed-form engines; the only shared vocabulary is the scaled parameter set.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace membec::oracle {

using cd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double pi_ = 3.141592653589793238462643383279502884;

struct FockConfig {
    int n_max = 0;               // 0 picks an automatic truncation
    double tail_tol = 1e-13;     // initial-state Boltzmann tail budget
    double top_budget = 1e-10;   // allowed relative population in the top 3 levels
};

struct TruncationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline int auto_n_max(double nbar, double z_abs, double At, std::size_t n_steps, double tail_tol) {
    double base;
    if (nbar > 0) {
        double q = nbar / (1 + nbar);
        base = std::ceil(std::log(tail_tol) / std::log(q));
    } else {
        base = std::ceil(z_abs * z_abs + 8 * z_abs) + 20;
    }
    base = std::max(base, 24.0);
    double shift = static_cast<double>(n_steps) * std::abs(At) + z_abs;
    double extra = 2 * std::sqrt(base) * shift + shift * shift;
    return static_cast<int>(base + std::ceil(extra)) + 30;
}

// Spin-1 operators rebuilt from the ladder algebra, basis order (+1, 0, -1).
inline Eigen::Matrix3cd spin_matrix(char axis) {
    double s = std::sqrt(2.0);
    Eigen::Matrix3cd fp = Eigen::Matrix3cd::Zero();
    fp(0, 1) = s;
    fp(1, 2) = s;
    if (axis == 'z') {
        Eigen::Matrix3cd fz = Eigen::Matrix3cd::Zero();
        fz(0, 0) = 1;
        fz(2, 2) = -1;
        return fz;
    }
    if (axis == 'x') return 0.5 * (fp + fp.adjoint());
    return cd(0, -0.5) * (fp - fp.adjoint());
}

// Eigenprojector of a spin component for the eigenvalue label g.
inline Eigen::Matrix3cd spin_projector(char axis, int g) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(spin_matrix(axis));
    for (int k = 0; k < 3; ++k) {
        if (std::abs(es.eigenvalues()[k] - g) < 0.25) {
            Eigen::Vector3cd v = es.eigenvectors().col(k);
            return v * v.adjoint();
        }
    }
    throw std::invalid_argument("no eigenvalue near the requested label");
}

// Unit eigenvector with the first nonzero component rotated real positive.
inline Eigen::Vector3cd spin_eigenvector(char axis, int g) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(spin_matrix(axis));
    for (int k = 0; k < 3; ++k) {
        if (std::abs(es.eigenvalues()[k] - g) < 0.25) {
            Eigen::Vector3cd v = es.eigenvectors().col(k);
            for (int i = 0; i < 3; ++i) {
                if (std::abs(v[i]) > 1e-12) {
                    v *= std::conj(v[i]) / std::abs(v[i]);
                    break;
                }
            }
            return v;
        }
    }
    throw std::invalid_argument("no eigenvalue near the requested label");
}

// Displacement generator: spectral decomposition of K = i(adag - a), so that
// D(d) = exp(d(adag - a)) = V exp(-i d Lambda) Vdag for real d.
class DisplacementGen {
  public:
    explicit DisplacementGen(int n) : n_(n) {
        MatrixXcd K = MatrixXcd::Zero(n, n);
        for (int k = 1; k < n; ++k) {
            K(k, k - 1) = cd(0, std::sqrt(static_cast<double>(k)));
            K(k - 1, k) = cd(0, -std::sqrt(static_cast<double>(k)));
        }
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(K);
        V_ = es.eigenvectors();
        lam_ = es.eigenvalues();
    }

    MatrixXcd displacement(double d) const {
        VectorXcd ph(n_);
        for (int k = 0; k < n_; ++k) ph[k] = std::exp(cd(0, -d * lam_[k]));
        return V_ * ph.asDiagonal() * V_.adjoint();
    }

    int size() const { return n_; }

  private:
    int n_;
    MatrixXcd V_;
    VectorXd lam_;
};

// Propagator of one spin sector over angle theta:
// a global spin phase times D(-d) diag(exp(-i theta (n + 1/2))) D(d),
// with d = alpha * At / 2.
inline MatrixXcd sector_propagator(const DisplacementGen& gen, double At, double OmL, int alpha,
                                   double theta) {
    int n = gen.size();
    double dOm = 0.25 * At * At;
    double d = 0.5 * alpha * At;
    MatrixXcd Dp = gen.displacement(d);
    VectorXcd ph(n);
    for (int k = 0; k < n; ++k) ph[k] = std::exp(cd(0, -theta * (k + 0.5)));
    cd spin_phase = std::exp(cd(0, -theta * (OmL * alpha - dOm * alpha * alpha)));
    return spin_phase * (Dp.adjoint() * (ph.asDiagonal() * Dp));
}

inline VectorXcd coherent_vector(int n, cd z) {
    VectorXcd v(n);
    double lognorm = -0.5 * std::norm(z);
    cd logz = (z == cd(0, 0)) ? cd(0, 0) : std::log(z);
    double lf = 0;
    for (int k = 0; k < n; ++k) {
        if (k > 0) lf += 0.5 * std::log(static_cast<double>(k));
        if (z == cd(0, 0)) {
            v[k] = (k == 0) ? 1.0 : 0.0;
        } else {
            cd ex = lognorm + static_cast<double>(k) * logz - lf;
            v[k] = std::exp(ex);
        }
    }
    if (z == cd(0, 0)) v *= std::exp(lognorm);
    return v;
}

struct OracleResult {
    double prob = 0;
    MatrixXcd rho_mem;  // unnormalized reduced membrane state, Fock basis
    int n_max = 0;
    double top_occupancy = 0;  // relative population of the top 3 levels
};

namespace detail_ {

inline int resolve_n_max(const FockConfig& cfg, double nbar, double z_abs, double At,
                         std::size_t n_steps) {
    if (cfg.n_max == 0) return auto_n_max(nbar, z_abs, At, n_steps, cfg.tail_tol);
    if (cfg.n_max < 10) throw std::invalid_argument("n_max must be at least 10");
    return cfg.n_max;
}

inline void gate_truncation(OracleResult& res, double budget) {
    int n = static_cast<int>(res.rho_mem.rows());
    double tr = res.rho_mem.diagonal().real().sum();
    double top = 0;
    for (int k = n - 3; k < n; ++k) top += res.rho_mem(k, k).real();
    res.top_occupancy = tr > 0 ? top / tr : 0;
    if (res.top_occupancy > budget)
        throw TruncationError("truncated basis too small: top-level population " +
                              std::to_string(res.top_occupancy));
}

}  // namespace detail_

// Thermal initial membrane: evolve the nine spin-sector blocks of the joint
// density matrix, applying the projective spin measurements in between.
inline OracleResult run_thermal(double At, double nbar, double OmL, const std::vector<double>& thetas,
                                const std::vector<int>& outcomes, const FockConfig& cfg = {}) {
    if (thetas.size() != outcomes.size())
        throw std::invalid_argument("need one outcome per interval");
    int n = detail_::resolve_n_max(cfg, nbar, 0.0, At, thetas.size());
    DisplacementGen gen(n);

    VectorXd boltz(n);
    if (nbar > 0) {
        double q = nbar / (1 + nbar);
        for (int k = 0; k < n; ++k) boltz[k] = std::pow(q, k);
    } else {
        boltz.setZero();
        boltz[0] = 1;
    }
    boltz /= boltz.sum();

    Eigen::Vector3cd chi = spin_eigenvector('x', 1);
    Eigen::Matrix3cd rho_spin = chi * chi.adjoint();

    // blocks[a][b] = <a| rho |b> on the membrane space, a,b spin indices (+1,0,-1)
    std::array<std::array<MatrixXcd, 3>, 3> blk;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            blk[a][b] = rho_spin(a, b) * MatrixXcd(boltz.cast<cd>().asDiagonal());

    for (std::size_t step = 0; step < thetas.size(); ++step) {
        std::array<MatrixXcd, 3> U;
        for (int a = 0; a < 3; ++a)
            U[a] = sector_propagator(gen, At, OmL, 1 - a, thetas[step]);
        for (int a = 0; a < 3; ++a)
            for (int b = a; b < 3; ++b) {
                blk[a][b] = U[a] * blk[a][b] * U[b].adjoint();
                if (b > a) blk[b][a] = blk[a][b].adjoint();
            }
        Eigen::Matrix3cd P = spin_projector('y', outcomes[step]);
        std::array<std::array<MatrixXcd, 3>, 3> nb;
        for (int a = 0; a < 3; ++a)
            for (int b = a; b < 3; ++b) {
                MatrixXcd m = MatrixXcd::Zero(n, n);
                for (int ap = 0; ap < 3; ++ap) {
                    if (P(a, ap) == cd(0, 0)) continue;
                    for (int bp = 0; bp < 3; ++bp) {
                        if (P(b, bp) == cd(0, 0)) continue;
                        m.noalias() += (P(a, ap) * std::conj(P(b, bp))) * blk[ap][bp];
                    }
                }
                nb[a][b] = m;
                if (b > a) nb[b][a] = m.adjoint();
            }
        blk = std::move(nb);
    }

    OracleResult res;
    res.n_max = n;
    res.rho_mem = blk[0][0] + blk[1][1] + blk[2][2];
    res.prob = res.rho_mem.diagonal().real().sum();
    detail_::gate_truncation(res, cfg.top_budget);
    return res;
}

struct CoherentOracleResult : OracleResult {
    std::array<VectorXcd, 3> sector;  // membrane amplitude vector per spin value (+1, 0, -1)
};

inline CoherentOracleResult run_coherent(double At, double a0, double b0, double OmL,
                                         const std::vector<double>& thetas,
                                         const std::vector<int>& outcomes,
                                         const FockConfig& cfg = {}) {
    if (thetas.size() != outcomes.size())
        throw std::invalid_argument("need one outcome per interval");
    double zabs = std::hypot(a0, b0);
    int n = detail_::resolve_n_max(cfg, 0.0, zabs, At, thetas.size());
    DisplacementGen gen(n);

    Eigen::Vector3cd chi = spin_eigenvector('x', 1);
    VectorXcd packet = coherent_vector(n, cd(a0, b0));
    std::array<VectorXcd, 3> psi;
    for (int a = 0; a < 3; ++a) psi[a] = chi[a] * packet;

    for (std::size_t step = 0; step < thetas.size(); ++step) {
        for (int a = 0; a < 3; ++a)
            psi[a] = sector_propagator(gen, At, OmL, 1 - a, thetas[step]) * psi[a];
        Eigen::Matrix3cd P = spin_projector('y', outcomes[step]);
        std::array<VectorXcd, 3> np;
        for (int a = 0; a < 3; ++a) {
            np[a] = VectorXcd::Zero(n);
            for (int b = 0; b < 3; ++b)
                if (P(a, b) != cd(0, 0)) np[a] += P(a, b) * psi[b];
        }
        psi = std::move(np);
    }

    CoherentOracleResult res;
    res.n_max = n;
    res.sector = psi;
    res.rho_mem = MatrixXcd::Zero(n, n);
    for (int a = 0; a < 3; ++a) res.rho_mem.noalias() += psi[a] * psi[a].adjoint();
    res.prob = res.rho_mem.diagonal().real().sum();
    detail_::gate_truncation(res, cfg.top_budget);
    return res;
}

// Normalized harmonic-oscillator eigenfunctions on the scaled coordinate
// u = x/x_zp (so the ground state has variance <u^2> = 1).
inline MatrixXd hermite_functions(const VectorXd& u, int n_max) {
    MatrixXd psi(u.size(), n_max);
    double c0 = std::pow(2 * pi_, -0.25);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        double y = u[i] / std::sqrt(2.0);
        psi(i, 0) = c0 * std::exp(-0.25 * u[i] * u[i]);
        if (n_max > 1) psi(i, 1) = std::sqrt(2.0) * y * psi(i, 0);
        for (int k = 2; k < n_max; ++k)
            psi(i, k) = std::sqrt(2.0 / k) * y * psi(i, k - 1) -
                        std::sqrt((k - 1.0) / k) * psi(i, k - 2);
    }
    return psi;
}

namespace detail_ {

// real-basis-change sandwich Pf * rho * Pi^T done as real GEMMs
inline MatrixXcd sandwich(const MatrixXd& Pf, const MatrixXcd& rho, const MatrixXd& Pi) {
    MatrixXd re = Pf * rho.real() * Pi.transpose();
    MatrixXd im = Pf * rho.imag() * Pi.transpose();
    return re.cast<cd>() + cd(0, 1) * im.cast<cd>();
}

}  // namespace detail_

inline MatrixXcd position_density(const MatrixXcd& rho_fock, const VectorXd& uf, const VectorXd& ui) {
    int n = static_cast<int>(rho_fock.rows());
    MatrixXd Pf = hermite_functions(uf, n), Pi = hermite_functions(ui, n);
    return detail_::sandwich(Pf, rho_fock, Pi);
}

// Wigner transform by direct quadrature of the position-space integral.
// The offset coordinate is sampled on a refinement of the (uniform) u axis so
// every needed pair (u + s/2, u - s/2) lands on a precomputed fine-grid node;
// the oscillatory s integral is then a plain Riemann sum, spectrally accurate
// because the integrand is band-limited well inside the sampling rate.
inline MatrixXd wigner_numeric(const MatrixXcd& rho_fock, const VectorXd& u, const VectorXd& v,
                               double coth_eta = 1.0) {
    int n = static_cast<int>(rho_fock.rows());
    if (u.size() < 2) throw std::invalid_argument("wigner grid needs at least 2 u points");
    double du = u[1] - u[0];
    if (!(du > 0)) throw std::invalid_argument("wigner quadrature requires an increasing u axis");
    for (Eigen::Index i = 1; i < u.size(); ++i)
        if (std::abs((u[i] - u[i - 1]) - du) > 1e-9 * std::abs(du))
            throw std::invalid_argument("wigner quadrature requires a uniform u axis");

    // Step size from the total bandwidth of rho(u+s, u-s) exp(-i v s) in s:
    // the external frequency |v|, plus twice the internal momentum content
    // (packet momentum centers are bounded by the v grid itself, widths by
    // the thermal momentum spread).
    double vabs = v.cwiseAbs().maxCoeff();
    double h = 2 * pi_ / (3 * vabs + 14 * std::sqrt(coth_eta) + 30);
    int refine = std::max(1, static_cast<int>(std::ceil(du / h)));
    h = du / refine;
    double s_half = 0.5 * (u[u.size() - 1] - u[0]) + 6 + 10 / std::sqrt(coth_eta);
    int K = static_cast<int>(std::ceil(s_half / h));

    Eigen::Index nu = u.size();
    Eigen::Index nfine = K + (nu - 1) * refine + K + 1;
    VectorXd xfine(nfine);
    for (Eigen::Index j = 0; j < nfine; ++j) xfine[j] = u[0] + (static_cast<double>(j) - K) * h;

    MatrixXd Psi = hermite_functions(xfine, n);
    MatrixXcd rho_pos = detail_::sandwich(Psi, rho_fock, Psi);

    MatrixXd w(nu, v.size());
    for (Eigen::Index i = 0; i < nu; ++i) {
        Eigen::Index c = K + i * refine;
        for (Eigen::Index jv = 0; jv < v.size(); ++jv) {
            cd acc = 0;
            for (int k = -K; k <= K; ++k) {
                cd r = rho_pos(c + k, c - k);
                acc += r * std::exp(cd(0, -v[jv] * k * h));
            }
            w(i, jv) = (acc * h / (2 * pi_)).real();
        }
    }
    return w;
}

// Sum of absolute eigenvalues of a Hermitian difference: the trace norm.
inline double trace_norm_hermitian(const MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es((m + m.adjoint()) / 2.0);
    return es.eigenvalues().cwiseAbs().sum();
}

}  // namespace membec::oracle
