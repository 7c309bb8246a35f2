/*
 Copyright 2026 The hypctrl Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef HYPCTRL_FLATNESS_HPP
#define HYPCTRL_FLATNESS_HPP

#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hypctrl/model.hpp"
#include "hypctrl/transforms.hpp"

namespace hypctrl {

/// Flat output y = h^T xi with h^T = e_n^T Mc^{-1}, and the boundary
/// parametrizations x1(0) = p1^T y^[n], x2(0) = p2^T y^[n].
struct FlatStructure {
    int n = 0;
    Eigen::RowVectorXd h;
    Eigen::MatrixXd Tc;
    Eigen::MatrixXd Tc_inv;
    Eigen::RowVectorXd p1;
    Eigen::RowVectorXd p2;

    /// Factor s with xi_component = s * y for a constant flat output.
    double output_scale(int component) const;
};

FlatStructure flat_structure(const HyperbolicSystem& sys);

/// A scalar signal with derivatives up to max_order(), defined on a time window.
class FlatOutputSignal {
public:
    virtual ~FlatOutputSignal() = default;
    virtual int max_order() const = 0;
    /// out[i] = y^(i)(t) for i < out.size().
    virtual void derivatives(double t, std::span<double> out) const = 0;
    virtual double window_begin() const { return -std::numeric_limits<double>::infinity(); }
    virtual double window_end() const { return std::numeric_limits<double>::infinity(); }

    double derivative(int order, double t) const;
};

/// Rest-to-rest transition from y0 (t <= t0) to y_star (t >= t_star) along a
/// polynomial of degree 2n+1 in s = (t - t0)/(t_star - t0).
class ReferencePlan : public FlatOutputSignal {
public:
    ReferencePlan(double y0, double y_star, double t0, double t_star, int n);

    int max_order() const override { return std::numeric_limits<int>::max(); }
    void derivatives(double t, std::span<double> out) const override;

    double y0() const { return y0_; }
    double y_star() const { return y_star_; }
    double t0() const { return t0_; }
    double t_star() const { return t_star_; }
    int n() const { return n_; }
    /// c_0 .. c_{2n+1} in the normalized variable s.
    const std::vector<double>& coefficients() const { return c_; }
    /// Coefficients in s of d^i y / ds^i.
    const std::vector<double>& derivative_coefficients(int i) const { return dc_[i]; }
    int degree() const { return 2 * n_ + 1; }

private:
    double y0_, y_star_, t0_, t_star_;
    int n_;
    std::vector<double> c_;
    std::vector<std::vector<double>> dc_;  // coefficients of the i-th s-derivative
};

ReferencePlan plan_reference(double y0, double y_star, double t0, double t_star, int n);

/// Piecewise-uniform grid on [-tau2, tau1] with a node at tau = 0.
struct TauGrid {
    double tau1 = 0.0;
    double tau2 = 0.0;
    int n_neg = 1;
    int n_pos = 1;

    /// Steps no larger than `step` on both pieces.
    static TauGrid make(double tau1, double tau2, double step);

    double h_neg() const { return tau2 / n_neg; }
    double h_pos() const { return tau1 / n_pos; }
    double neg_node(int i) const { return -tau2 + i * h_neg(); }
    double pos_node(int i) const { return i * h_pos(); }
};

/// Function on a TauGrid; `neg` covers [-tau2, 0] and `pos` covers [0, tau1],
/// so a jump at tau = 0 is represented exactly.
struct PiecewiseTable {
    Profile neg;
    Profile pos;

    static PiecewiseTable zeros(const TauGrid& grid);
    double integral(const TauGrid& grid) const;
    /// Linear interpolation; at tau = 0 the right limit is returned.
    double eval(const TauGrid& grid, double tau) const;
};

enum class Endpoint { Plus, Minus };

struct ShiftAtom {
    double weight = 0.0;
    Endpoint at = Endpoint::Plus;
    int order = 0;
};

/// L[y](t) = sum_atoms w y^(o)(t + shift) + sum_o int_{-tau2}^{tau1} d_o(tau) y^(o)(t + tau) dtau,
/// with shift +tau1 or -tau2.
struct ShiftDerivativeFunctional {
    TauGrid grid;
    int n = 0;
    std::vector<ShiftAtom> atoms;
    std::vector<PiecewiseTable> densities;  // index = derivative order 0..n

    double evaluate(const FlatOutputSignal& y, double t) const;
};

/// Canonical form u = y^(n)(t+tau1) + sum_{i<=n} a_i y^(i)(t-tau2) + int a(tau) y^(n)(t+tau) dtau.
struct HccfCoefficients {
    TauGrid grid;
    Eigen::VectorXd a;   // a_0 .. a_n
    PiecewiseTable a_fun;

    int n() const { return static_cast<int>(a.size()) - 1; }
};

ShiftDerivativeFunctional input_functional(const FlatStructure& flat, const TransformedSystem& ts,
                                           const TauGrid& grid);
HccfCoefficients reduce_to_canonical(const ShiftDerivativeFunctional& functional);

/// u_bar_r(t) from the canonical form evaluated on the plan.
double feedforward(const HccfCoefficients& coeffs, const FlatOutputSignal& plan, double t);

struct DesiredCoefficients {
    HccfCoefficients coeffs;
    bool kappa_hurwitz = false;
    bool gamma_admissible = false;
    std::vector<std::string> warnings;
};

/// Target dynamics eps^(n) + sum kappa_i eps^(i) = 0, eps(t) = e(t+tau1) + gamma e(t-tau2).
DesiredCoefficients desired_coefficients(double gamma, const Eigen::VectorXd& kappa, const TauGrid& grid);

/// Monic polynomial s^n + sum kappa_i s^i has all roots in the open left half plane.
bool is_hurwitz(const Eigen::VectorXd& kappa);
Eigen::VectorXcd polynomial_roots(const Eigen::VectorXd& kappa);

/// s^n [e^{tau1 s} + a_n e^{-tau2 s} + int a e^{tau s}] + sum_{i<n} a_i s^i e^{-tau2 s},
/// the transfer characteristic of the canonical form.
std::complex<double> characteristic_value(const HccfCoefficients& coeffs, std::complex<double> s);

/// eta_i = y^(i-1)(t - tau2), eta_{n+1}(tau) = y^(n)(t + tau), together with the
/// ODE state along the window that defines the lower derivatives.
struct HccfState {
    TauGrid grid;
    Eigen::VectorXd eta;
    PiecewiseTable eta_np1;
    std::vector<Eigen::VectorXd> xi_neg;  // xi(t + tau), tau on the negative piece
    std::vector<Eigen::VectorXd> xi_pos;  // xi(t + tau), tau on the positive piece
};

/// Maps (xi, x_bar) at one instant to the canonical-form state. Tables that
/// depend only on the system are built once.
class HccfTransformer {
public:
    HccfTransformer(const FlatStructure& flat, const TransformedSystem& ts, const TauGrid& grid);

    HccfState operator()(const Eigen::VectorXd& xi, const PdeProfiles& xbar) const;
    const TauGrid& grid() const { return grid_; }

private:
    FlatStructure flat_;
    TauGrid grid_;
    double q0_;
    Eigen::RowVectorXd top_row_;                 // e_n^T Tc F
    std::vector<Eigen::MatrixXd> exp_neg_;       // exp(-F k h_neg)
    std::vector<Eigen::MatrixXd> exp_pos_;       // exp(F k h_pos)
    std::vector<Eigen::VectorXd> g_neg_;         // exp(-F k h_neg) b / q0
    std::vector<Eigen::VectorXd> g_pos_;         // exp(F k h_pos) b
    std::vector<Eigen::MatrixXd> cbar_neg_;      // delayed-state kernel
    std::vector<Eigen::MatrixXd> cbar_pos_;      // predicted-state kernel
    std::vector<Eigen::RowVectorXd> c2_neg_;     // e2^T C(psi2(sigma))
    std::vector<Eigen::RowVectorXd> c1_pos_;     // e1^T C(psi1(sigma))
    std::vector<double> z_neg_;                  // psi2(sigma) on the negative piece
    std::vector<double> z_pos_;                  // psi1(sigma) on the positive piece
    Eigen::RowVectorXd c_;
};

HccfState hccf_transform(const FlatStructure& flat, const TransformedSystem& ts, const TauGrid& grid,
                         const Eigen::VectorXd& xi, const PdeProfiles& xbar);

/// The flat output around time t seen through an HCCF state (window [t - tau2, t + tau1]).
class HccfSignal : public FlatOutputSignal {
public:
    HccfSignal(const HccfState& state, const FlatStructure& flat, double t);

    int max_order() const override { return flat_.n; }
    void derivatives(double t, std::span<double> out) const override;
    double window_begin() const override { return t_ - state_.grid.tau2; }
    double window_end() const override { return t_ + state_.grid.tau1; }

private:
    const HccfState& state_;
    const FlatStructure& flat_;
    double t_;
};

struct ParametrizedState {
    Eigen::VectorXd xi;
    PdeProfiles xbar;
};

/// xi(t) and x_bar(., t) generated by the flat output around time t.
ParametrizedState parametrize_state(const FlatStructure& flat, const TransformedSystem& ts,
                                    const FlatOutputSignal& y, double t);

/// Precomputed quadrature weights for repeated evaluation of parametrize_state.
class StateParametrizer {
public:
    StateParametrizer(const FlatStructure& flat, const TransformedSystem& ts);
    ParametrizedState operator()(const FlatOutputSignal& y, double t) const;

private:
    ParametrizedState evaluate_plan(const ReferencePlan& plan, double t) const;

    FlatStructure flat_;
    Grid grid_;
    Profile phi1_;
    Profile phi2_;
    double tau1_;
    double tau2_;
    std::vector<Eigen::RowVectorXd> w1_;  // e1^T C(zeta) Tc^{-1} / lambda1(zeta)
    std::vector<Eigen::RowVectorXd> w2_;  // e2^T C(zeta) Tc^{-1} / lambda2(zeta)
    // prefix sums over nodes of w_i(o) phi_i^q, q <= 2n + 1
    std::vector<Eigen::MatrixXd> moments1_;
    std::vector<Eigen::MatrixXd> moments2_;
};

double flat_feedback(const HccfCoefficients& a, const HccfCoefficients& abar, const HccfState& state,
                     const FlatOutputSignal& plan, double t);

} // namespace hypctrl

#endif // HYPCTRL_FLATNESS_HPP
