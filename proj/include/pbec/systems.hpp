#pragma once

#include <Eigen/Dense>

#include "pbec/hierarchy.hpp"
#include "pbec/kernel.hpp"
#include "pbec/radau.hpp"
#include "pbec/scene.hpp"

namespace pbec {

// Full-field system. The Jacobian has diagonal n-n and f-f blocks and mixed
// blocks with the sparsity of g, so (s I - J) is solved by a Schur complement
// onto the photon block: an n_modes x n_modes dense solve plus diagonal work.
class FullFieldSystem : public OdeSystem {
public:
    FullFieldSystem(const Scene& scene, double pump) : scene_(scene), P_(pump) {}

    void set_pump(double P) override { P_ = P; }
    double pump() const override { return P_; }

    int dim() const override { return scene_.n_modes() + scene_.n_bins(); }
    int n_photon() const override { return scene_.n_modes(); }
    void rhs(const Eigen::VectorXd& y, Eigen::VectorXd& dy) override;
    void prepare_jacobian(const Eigen::VectorXd& y) override;
    void factor_real(double s) override;
    void solve_real(Eigen::VectorXd& b) override;
    void factor_complex(double sr, double si) override;
    void solve_complex(Eigen::VectorXd& br, Eigen::VectorXd& bi) override;
    bool clamp_to_box(Eigen::VectorXd& y, double rel_slack) override;

    const FullJacobian& jacobian() const { return jac_; }

private:
    const Scene& scene_;
    double P_;
    FullJacobian jac_;
    Eigen::VectorXd dn_, df_;

    Eigen::VectorXd Df_;                  // real factored f-f diagonal
    Eigen::PartialPivLU<Eigen::MatrixXd> schur_;
    Eigen::VectorXcd Dfz_;
    Eigen::PartialPivLU<Eigen::MatrixXcd> schur_z_;
};

/// Reduced (hierarchical) system; dense Jacobian, dense LU.
class HierarchicalSystem : public OdeSystem {
public:
    HierarchicalSystem(const Scene& scene, const HierarchyBasis& basis, double pump)
        : scene_(scene), basis_(basis), P_(pump) {}

    void set_pump(double P) override { P_ = P; }
    double pump() const override { return P_; }

    int dim() const override { return scene_.n_modes() + basis_.total_rank; }
    int n_photon() const override { return scene_.n_modes(); }
    void rhs(const Eigen::VectorXd& y, Eigen::VectorXd& dy) override;
    void prepare_jacobian(const Eigen::VectorXd& y) override;
    void factor_real(double s) override;
    void solve_real(Eigen::VectorXd& b) override;
    void factor_complex(double sr, double si) override;
    void solve_complex(Eigen::VectorXd& br, Eigen::VectorXd& bi) override;
    bool clamp_to_box(Eigen::VectorXd& y, double rel_slack) override;

private:
    const Scene& scene_;
    const HierarchyBasis& basis_;
    double P_;
    Eigen::MatrixXd J_;
    Eigen::VectorXd dn_, dc_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu_z_;
};

} // namespace pbec
