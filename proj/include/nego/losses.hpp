#pragma once

#include <span>
#include <vector>

#include "nego/linalg.hpp"
#include "nego/mlp.hpp"

namespace nego {

struct LossConfig {
    double c1 = 0.5;        // lower-bound factor on non-purchases, in (0,1)
    double c2 = 2.0;        // upper-bound factor on purchases, > 1
    double lambda = 1.0;    // weight of the independent terms
    double fd_delta = 1e-3; // step for the price-sensitivity estimate
    double classification_threshold = 0.5;
    // Which shared adversarial terms drive which player's updates. Defaults
    // follow the stated roles (seller chases revenue, buyer carries the
    // shape constraint); both are switchable.
    bool pointwise_in_seller = false;
    bool revenue_in_buyer = false;

    void validate() const;
};

/// Outcome-dependent price band. L is the purchase price on purchases and
/// c1*p otherwise; U mirrors it with c2*p on purchases.
double lower_bound(double p, int y, double c1);
double upper_bound(double p, int y, double c2);

/// Hinge penalty (L - f_s)^+ + (f_s - U)^+; zero exactly when f_s lies in
/// the band.
double boundary_penalty(double f_s, double p, int y, const LossConfig& cfg);

/// Piecewise-constant derivative of boundary_penalty in f_s: -1 below L,
/// +1 above U, 0 inside (band endpoints included).
double boundary_subgrad(double f_s, double p, int y, const LossConfig& cfg);

/// Binary cross-entropy with q clamped into [1e-7, 1 - 1e-7].
double cross_entropy(int y, double q);
/// d/dq of the clamped cross-entropy.
double cross_entropy_dq(int y, double q);

/// Per-interaction incremental expected revenue: f_s * f_b(x, f_s) - p*y.
double revenue_term(double f_s, double f_b_at_fs, double p, int y);

/// Symmetric finite-difference estimate of the buyer's price derivative at
/// price s, with both probe points clipped into [0,1]. The effective steps
/// are returned so training can chain gradients through the two probes.
struct SensitivityProbe {
    double value = 0.0;      // derivative estimate d
    double step_up = 0.0;    // effective +delta after clipping
    double step_down = 0.0;  // effective -delta after clipping
    double f_up = 0.0;       // f_b(x, s + step_up)
    double f_down = 0.0;     // f_b(x, s - step_down)
};
SensitivityProbe sensitivity_probe(const Mlp& buyer, std::span<const double> x, double s,
                                   double fd_delta);
double sensitivity_estimate(const Mlp& buyer, std::span<const double> x, double s,
                            double fd_delta);

/// Positive part of the derivative estimate; buyers are penalized only when
/// raising the price raises predicted purchase probability.
double pointwise_penalty(double d);

/// Everything the scalar losses need, computed once per batch.
struct BatchTerms {
    std::vector<double> f_s;       // seller suggestion per interaction
    std::vector<double> f_b_at_fs; // buyer probability at the suggested price
    std::vector<double> f_b_at_p;  // buyer probability at the offered price
    std::vector<double> sens;      // price-sensitivity estimates d
    std::vector<double> p;         // offered prices
    std::vector<int> y;            // outcomes

    std::size_t size() const { return p.size(); }
};

BatchTerms batch_terms(const Mlp& seller, const Mlp& buyer, const Matrix& contexts,
                       const std::vector<double>& prices, const std::vector<int>& outcomes,
                       const LossConfig& cfg);

/// Buyer side of the minimax objective:
/// mean[revenue + (d)^+ + lambda * cross-entropy at the offered price].
double buyer_loss(const BatchTerms& batch, const LossConfig& cfg);

/// The loss buyer updates actually descend: buyer_loss with the revenue
/// term present only when cfg.revenue_in_buyer is set.
double buyer_training_loss(const BatchTerms& batch, const LossConfig& cfg);

/// Seller side (the seller ascends this):
/// mean[revenue - lambda * boundary_penalty].
double seller_objective(const BatchTerms& batch, const LossConfig& cfg);

} // namespace nego
