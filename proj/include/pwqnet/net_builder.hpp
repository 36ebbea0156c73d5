#pragma once

// Closed-form constructions of one-hidden-layer ReLU networks that reproduce
// piecewise affine policies, piecewise quadratic value functions and the
// associated Q-functions exactly.

#include "pwqnet/types.hpp"

#include <Eigen/Core>

namespace pwqnet {

/// Linear map with h_q(x, u) = L h'_q(x, u), where
/// h_q(x, u) = (h_v(Ax + Bu); x'Qx + u'Ru).
struct LMatrix {
    Eigen::MatrixXd entries;  // (n(n+3)/2 + 1) x (n+m)(n+m+3)/2
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd Q;
    Eigen::MatrixXd R;

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
};

/// Width-s network on raw x: one neuron max(0, x_hi^(1) - x) followed by
/// ramps max(0, x - x_hi^(i-1)), output weights from gain differences.
ReluNetwork build_policy_net(const PwaFunction1D& policy);

/// Same construction reading x from the first entry of (x, x^2), so it can be
/// stacked with build_quadratic_net. Scalar PWA only.
ReluNetwork build_residual_net(const PwaFunction1D& residual);

/// Network over (x, x^2) whose neuron i is active exactly on int(R_i) and
/// removes the quadratic part of piece i. Throws UnboundedRegion.
ReluNetwork build_quadratic_net(const PwqFunction1D& pwq);

/// V - build_quadratic_net(V), piece i being kappa_i x + beta_i.
PwaFunction1D residual_pwa(const PwqFunction1D& pwq);

/// Quadratic net and residual net stacked into one hidden layer of width 2s.
ReluNetwork build_value_net(const PwqFunction1D& pwq);

/// Concatenates the hidden layers of two single-hidden-layer scalar networks
/// with the same feature map; outputs add.
ReluNetwork stack_hidden(const ReluNetwork& first, const ReluNetwork& second);

LMatrix build_l_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                       const Eigen::MatrixXd& R);
LMatrix build_l_matrix(const MpcProblem1D& problem);

/// Q-network from a network over h_v for the previous horizon: one extra
/// neuron passes the stage cost through, and the first layer absorbs L so the
/// network reads h'_q(x, u). Throws FeatureMapMismatch.
ReluNetwork build_q_net(const ReluNetwork& value_net_prev, const LMatrix& l_matrix);

/// The residual block of the previous value function rewired to read the
/// successor state from h'_q through L.
ReluNetwork build_successor_residual_net(const PwqFunction1D& v_prev, const LMatrix& l_matrix);

/// Complete Q_N network of width 2s' + 1 over h'_q(x, u).
ReluNetwork build_full_q_net(const MpcProblem1D& problem, const PwqFunction1D& v_prev);

}  // namespace pwqnet
