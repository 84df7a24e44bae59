// Exact propagation of the reduced (S, K) system used by the optimizer.
// Controls are piecewise constant (node i holds over [t_i, t_{i+1})) and the
// input is linear across the interval. Each interval is solved in the
// eigenbasis of its 2x2 generator, where every term (state update, input
// response and parameter sensitivities) is a divided difference of exp.
// Near a degenerate eigenbasis the interval falls back to the exponential of
// a 4x4 augmented generator (S, K, e, de/dt), with Frechet derivatives from
// the 8x8 block-triangular exponential.

#include "nobleqm/control.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace nobleqm {

namespace {

using M4 = Eigen::Matrix<cplx, 4, 4>;
using M8 = Eigen::Matrix<cplx, 8, 8>;
using V4 = Eigen::Matrix<cplx, 4, 1>;
using M2 = Eigen::Matrix<cplx, 2, 2>;
using V2 = Eigen::Matrix<cplx, 2, 1>;

struct Held {
    cplx omega;
    double delta_s;
    double delta_k;
};

Held held(const ControlVector &c, std::size_t n)
{
    return {c.omega[n], c.delta_s[n], c.delta[n] + c.delta_s[n]};
}

double input_coupling(const StorageProblem &p)
{
    // |a_Omega|^2 = 2 (C/(C+1)) gamma_Omega, or 2 gamma_Omega in the ideal limit
    return p.norm == Normalization::Ideal ? std::sqrt(2.0)
                                          : std::sqrt(2.0 * p.params.cooperativity_factor());
}

M4 generator(const StorageProblem &p, const Held &u, double h)
{
    const double J = p.params.exchange_J;
    const double c = input_coupling(p);
    M4 X = M4::Zero();
    X(0, 0) = -cplx(p.params.gamma_s + std::norm(u.omega), u.delta_s) * h;
    X(0, 1) = -I * J * h;
    X(1, 0) = -I * J * h;
    X(1, 1) = -cplx(p.params.gamma_k, u.delta_k) * h;
    X(0, 2) = -c * std::conj(u.omega) * h;
    X(2, 3) = h;
    return X;
}

void check_sizes(const StorageProblem &p, const ControlVector &c)
{
    if (c.nodes() != p.nodes() || c.delta_s.size() != p.nodes() || c.delta.size() != p.nodes() ||
        p.input.size() != p.nodes())
        throw GridMismatch("control vector and storage problem have different node counts");
    if (p.nodes() < 2) throw GridMismatch("storage problem needs at least two nodes");
}

// Divided difference exp[z_0, ..., z_{m-1}], m <= 4. Far-apart points use
// the recurrence; clustered points use the series about their mean,
// exp[z] = e^c sum_n h_n(z - c) / (n + m - 1)!, with h_n the complete
// homogeneous symmetric polynomials.
cplx dd_exp(const cplx *z, int m)
{
    if (m == 1) return std::exp(z[0]);
    int a = 0, b = 0;
    double far2 = 0.0; // squared distances throughout
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            if (std::norm(z[i] - z[j]) > far2) {
                far2 = std::norm(z[i] - z[j]);
                a = i;
                b = j;
            }
    if (far2 > 0.25) {
        cplx without_a[4], without_b[4];
        for (int i = 0, na = 0, nb = 0; i < m; ++i) {
            if (i != a) without_a[na++] = z[i];
            if (i != b) without_b[nb++] = z[i];
        }
        return (dd_exp(without_b, m - 1) - dd_exp(without_a, m - 1)) / (z[a] - z[b]);
    }
    // points near the origin need no shift
    double r2 = 0.0;
    for (int i = 0; i < m; ++i) r2 = std::max(r2, std::norm(z[i]));
    cplx c{};
    if (r2 > 0.25) {
        for (int i = 0; i < m; ++i) c += z[i];
        c /= static_cast<double>(m);
        r2 = 0.0;
        for (int i = 0; i < m; ++i) r2 = std::max(r2, std::norm(z[i] - c));
    }
    const double r = std::sqrt(r2);
    int terms = 1;
    for (double bound = r; terms < 24 && bound > 1e-18; ++terms) bound *= r / (terms + 1);
    cplx h[25];
    h[0] = 1.0;
    for (int n = 1; n <= terms; ++n) h[n] = 0.0;
    for (int i = 0; i < m; ++i) {
        const cplx w = z[i] - c;
        for (int n = 1; n <= terms; ++n) h[n] += w * h[n - 1];
    }
    cplx sum{};
    double inv_fact = 1.0; // 1/(n+m-1)!
    for (int k = 2; k < m; ++k) inv_fact /= k;
    for (int n = 0; n <= terms; ++n) {
        sum += h[n] * inv_fact;
        inv_fact /= static_cast<double>(n + m);
    }
    return c == cplx{} ? sum : std::exp(c) * sum;
}

cplx dd_exp(cplx a, cplx b) { const cplx z[2] = {a, b}; return dd_exp(z, 2); }
cplx dd_exp(cplx a, cplx b, cplx c) { const cplx z[3] = {a, b, c}; return dd_exp(z, 3); }
cplx dd_exp(cplx a, cplx b, cplx c, cplx d) { const cplx z[4] = {a, b, c, d}; return dd_exp(z, 4); }

// One interval: S' = A S + beta e(t) e_0 with e linear, A the 2x2 block of
// the generator. Solved in the eigenbasis A = V diag(z/h) V^-1 when V is
// well conditioned.
struct Interval {
    double h = 0.0;
    cplx beta, e0, e1; // input coupling, input value and slope
    bool closed = false;
    cplx z[2];
    cplx ez[2], phi1[2], phi2[2]; // exp[z], exp[z, 0], exp[z, 0, 0]
    M2 V, W;
    M4 X; // fallback generator
};

void cache_phi(Interval &iv)
{
    for (int k = 0; k < 2; ++k) {
        iv.ez[k] = std::exp(iv.z[k]);
        iv.phi1[k] = dd_exp(iv.z[k], 0.0);
        iv.phi2[k] = dd_exp(iv.z[k], 0.0, 0.0);
    }
}

Interval make_interval(const StorageProblem &p, const ControlVector &c, std::size_t n)
{
    Interval iv;
    iv.h = p.times[n + 1] - p.times[n];
    const Held u = held(c, n);
    iv.beta = -input_coupling(p) * std::conj(u.omega);
    // the input window closes at pulse_end; tail intervals see no input
    if (n < p.pulse_end) {
        iv.e0 = p.input[n];
        iv.e1 = (p.input[n + 1] - p.input[n]) / iv.h;
    }
    const cplx a = -cplx(p.params.gamma_s + std::norm(u.omega), u.delta_s) * iv.h;
    const cplx d = -cplx(p.params.gamma_k, u.delta_k) * iv.h;
    const cplx b = -I * p.params.exchange_J * iv.h;
    if (b == cplx{}) {
        iv.closed = true;
        iv.z[0] = a;
        iv.z[1] = d;
        iv.V.setIdentity();
        iv.W.setIdentity();
        cache_phi(iv);
        return iv;
    }
    const cplx half = 0.5 * (a - d), mid = 0.5 * (a + d);
    const cplx root = std::sqrt(half * half + b * b);
    iv.z[0] = mid + root;
    iv.z[1] = mid - root;
    for (int k = 0; k < 2; ++k) {
        // (A - z) v = 0 has solutions (b, z - a) and (z - d, b); keep the larger
        V2 v1(b, iv.z[k] - a), v2(iv.z[k] - d, b);
        V2 v = v1.norm() >= v2.norm() ? v1 : v2;
        iv.V.col(k) = v / v.norm();
    }
    const cplx det = iv.V.determinant();
    if (std::abs(det) > 1e-4) {
        iv.W << iv.V(1, 1), -iv.V(0, 1), -iv.V(1, 0), iv.V(0, 0);
        iv.W /= det;
        iv.closed = true;
        cache_phi(iv);
    } else {
        iv.X = generator(p, u, iv.h);
    }
    return iv;
}

V2 step_forward(const Interval &iv, const V2 &y0)
{
    if (!iv.closed) {
        V4 z0;
        z0 << y0(0), y0(1), iv.e0, iv.e1;
        const V4 z1 = iv.X.exp() * z0;
        return V2(z1(0), z1(1));
    }
    const V2 u0 = iv.W * y0;
    V2 u1;
    for (int k = 0; k < 2; ++k) {
        const cplx drive = iv.e0 * iv.h * iv.phi1[k] + iv.e1 * iv.h * iv.h * iv.phi2[k];
        u1(k) = iv.ez[k] * u0(k) + iv.beta * iv.W(k, 0) * drive;
    }
    return iv.V * u1;
}

// Sensitivities of Re(lambda^H y1) to the held parameters of one interval,
// plus the adjoint at the interval start.
struct Sensitivity {
    cplx d_a;    ///< lambda^H dy1/dA_00
    cplx d_d;    ///< lambda^H dy1/dA_11
    cplx d_beta; ///< lambda^H dy1/dbeta
    V2 lambda;
};

Sensitivity sensitivity(const Interval &iv, const V2 &y0, const V2 &lambda)
{
    Sensitivity out;
    const double h = iv.h;
    if (!iv.closed) {
        V4 z0, lam;
        z0 << y0(0), y0(1), iv.e0, iv.e1;
        lam << lambda(0), lambda(1), 0.0, 0.0;
        const M4 XH = iv.X.adjoint();
        M8 block = M8::Zero();
        block.topLeftCorner<4, 4>() = XH;
        block.bottomRightCorner<4, 4>() = XH;
        block.topRightCorner<4, 4>() = lam * z0.adjoint();
        const M8 eb = block.exp();
        const M4 G = eb.topRightCorner<4, 4>(); // Frechet derivative L(X^H, lambda z^H)
        out.d_a = std::conj(G(0, 0)) * h;
        out.d_d = std::conj(G(1, 1)) * h;
        out.d_beta = std::conj(G(0, 2)) * h;
        const V4 prev = eb.topLeftCorner<4, 4>() * lam;
        out.lambda = V2(prev(0), prev(1));
        return out;
    }
    // rho = lambda^H V; u0 and c are the start state and input coupling in the eigenbasis
    const Eigen::Matrix<cplx, 1, 2> rho = lambda.adjoint() * iv.V;
    const V2 u0 = iv.W * y0;
    const V2 c = iv.W.col(0) * iv.beta;
    out.d_beta = 0.0;
    for (int k = 0; k < 2; ++k)
        out.d_beta += rho(k) * iv.W(k, 0) *
                      (iv.e0 * h * iv.phi1[k] + iv.e1 * h * h * iv.phi2[k]);
    // I_kl = int_0^h exp(mu_k (h - t)) u_l(t) dt, each term a convolution of exponentials
    cplx I_kl[2][2];
    for (int k = 0; k < 2; ++k)
        for (int l = k; l < 2; ++l) {
            const cplx f2 = h * dd_exp(iv.z[k], iv.z[l]);
            const cplx f3 = h * h * dd_exp(iv.z[k], iv.z[l], 0.0);
            const cplx f4 = h * h * h * dd_exp(iv.z[k], iv.z[l], 0.0, 0.0);
            const cplx drive = iv.e0 * f3 + iv.e1 * f4;
            I_kl[k][l] = u0(l) * f2 + c(l) * drive;
            if (l != k) I_kl[l][k] = u0(k) * f2 + c(k) * drive;
        }
    cplx dj[2] = {};
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) dj[j] += rho(k) * iv.W(k, j) * iv.V(j, l) * I_kl[k][l];
    out.d_a = dj[0];
    out.d_d = dj[1];
    Eigen::Matrix<cplx, 1, 2> row = Eigen::Matrix<cplx, 1, 2>::Zero();
    for (int k = 0; k < 2; ++k) row += rho(k) * iv.ez[k] * iv.W.row(k);
    out.lambda = row.adjoint();
    return out;
}

} // namespace

StorageProblem make_storage_problem(const PhysicalParams &params, const Envelope &input,
                                    double tail_duration, std::size_t tail_intervals,
                                    Normalization norm)
{
    StorageProblem p;
    p.params = params;
    p.norm = norm;
    if (norm == Normalization::Ideal) p.params.gamma_k = 0.0;
    const std::size_t n = input.size();
    p.times.reserve(n + tail_intervals);
    p.input.reserve(n + tail_intervals);
    for (std::size_t i = 0; i < n; ++i) {
        p.times.push_back(input.time(i));
        p.input.push_back(input.samples[i]);
    }
    p.pulse_end = n - 1;
    if (tail_duration > 0.0 && tail_intervals > 0) {
        const double h = tail_duration / static_cast<double>(tail_intervals);
        const double t_end = input.t_end();
        for (std::size_t j = 1; j <= tail_intervals; ++j) {
            p.times.push_back(t_end + h * static_cast<double>(j));
            p.input.push_back(cplx{});
        }
    }
    p.photons = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
        p.photons += 0.5 * (std::norm(input.samples[i]) + std::norm(input.samples[i + 1])) * input.dt;
    return p;
}

double objective(const StorageProblem &p, const ControlVector &c, NodeTrajectory *record)
{
    check_sizes(p, c);
    if (!(p.photons > 0.0)) throw NotNormalized("objective needs an input with N > 0");
    const std::size_t n = p.nodes();
    V2 y = V2::Zero();
    if (record) {
        record->s.assign(n, cplx{});
        record->k.assign(n, cplx{});
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        y = step_forward(make_interval(p, c, i), y);
        if (record) {
            record->s[i + 1] = y(0);
            record->k[i + 1] = y(1);
        }
    }
    return std::norm(y(1)) / p.photons;
}

ControlVector gradient_adjoint(const StorageProblem &p, const ControlVector &c, double *value)
{
    check_sizes(p, c);
    if (!(p.photons > 0.0)) throw NotNormalized("gradient needs an input with N > 0");
    const std::size_t n = p.nodes();
    const double cin = input_coupling(p);

    std::vector<Interval> steps(n - 1);
    std::vector<V2> start(n - 1);
    V2 y = V2::Zero();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        steps[i] = make_interval(p, c, i);
        start[i] = y;
        y = step_forward(steps[i], y);
    }
    if (value) *value = std::norm(y(1)) / p.photons;

    ControlVector g = ControlVector::zeros(n);
    g.mask = c.mask;
    g.omega_max = c.omega_max;
    g.delta_max = c.delta_max;

    // lambda = dL/dRe(y) + i dL/dIm(y) at the end of the current interval
    V2 lambda(0.0, 2.0 * y(1) / p.photons);
    for (std::size_t i = n - 1; i-- > 0;) {
        const Sensitivity s = sensitivity(steps[i], start[i], lambda);
        // A_00 = -(gamma_s + |omega|^2 + i delta_s), A_11 = -(gamma_k + i delta_k), beta = -c conj(omega)
        const cplx w = c.omega[i];
        const double d_re = std::real(s.d_a * (-2.0 * w.real()) + s.d_beta * (-cin));
        const double d_im = std::real(s.d_a * (-2.0 * w.imag()) + s.d_beta * (I * cin));
        const double d_dk = std::real(s.d_d * (-I));
        const double d_ds = std::real(s.d_a * (-I)) + d_dk; // delta_k = delta + delta_s
        g.omega[i] = cplx(c.mask[ControlVector::OmegaRe] ? d_re : 0.0, c.mask[ControlVector::OmegaIm] ? d_im : 0.0);
        if (c.mask[ControlVector::DeltaS]) g.delta_s[i] = d_ds;
        if (c.mask[ControlVector::Delta]) g.delta[i] = d_dk;
        lambda = s.lambda;
    }
    return g;
}

} // namespace nobleqm
