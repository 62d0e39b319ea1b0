#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <utility>
#include <vector>

namespace mlct {

using Mat = Eigen::MatrixXd;

// Variance-preserving noise schedule parameterized by the rates beta0 < beta1.
// alpha(t)^2 + sigma(t)^2 = 1 on the whole horizon.
struct NoiseSchedule {
    double beta0 = 0.1;
    double beta1 = 20.0;

    NoiseSchedule() = default;
    NoiseSchedule(double b0, double b1);

    double beta(double t) const { return beta0 + t * (beta1 - beta0); }
    double alpha(double t) const;
    double sigma(double t) const;
    double log_snr(double t) const;
    // (f, g^2): drift f(t) = d log alpha / dt, diffusion g^2 = d sigma^2/dt - 2 f sigma^2
    std::pair<double, double> drift_diffusion(double t) const;
};

// The paper's stated betas; kept as a named alternative because they do not
// reach a unit-Gaussian prior at t=1 (alpha(1) ~ 0.78).
NoiseSchedule paper_beta_schedule();

// N-point rho-warped discretization of [epsilon, T], endpoint-exact,
// strictly increasing. times are 0-indexed here; times.front()==epsilon,
// times.back()==T.
struct TimeGrid {
    double epsilon = 0.002;
    double T = 1.0;
    int N = 50;
    double rho = 7.0;
    std::vector<double> times;
};

TimeGrid karras_grid(double epsilon, double T, int N, double rho);

// Skip-connection coefficients of the consistency parameterization.
// c_skip(0)=1, c_out(0)=0; the 10t factor is literal.
std::pair<double, double> skip_coeffs(double t, double eta = 0.5);

// alpha_t * x_eps + sigma_t * z
Mat perturb(const Mat& x_eps, double t, const Mat& z, const NoiseSchedule& s);

// First-order data-prediction solver step from t down to t_prev:
//   (sigma_prev/sigma_t) x_t - alpha_prev (e^{-h} - 1) x0_hat,  h = lambda_prev - lambda_t
Mat dpmpp_step(const Mat& x_t, double t, double t_prev, const Mat& x0_hat,
               const NoiseSchedule& s);

}  // namespace mlct
