#include "mlct/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mlct {

namespace {

void check_time(double t, double lo, double hi, const char* who) {
    if (!(t >= lo && t <= hi))
        throw std::domain_error(std::string(who) + ": t=" + std::to_string(t) +
                                " outside [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "]");
}

}  // namespace

NoiseSchedule::NoiseSchedule(double b0, double b1) : beta0(b0), beta1(b1) {
    if (!(0.0 < b0 && b0 < b1))
        throw std::invalid_argument("NoiseSchedule: need 0 < beta0 < beta1");
}

double NoiseSchedule::alpha(double t) const {
    check_time(t, 0.0, 1.0, "alpha");
    return std::exp(-0.25 * t * t * (beta1 - beta0) - 0.5 * t * beta0);
}

double NoiseSchedule::sigma(double t) const {
    double a = alpha(t);
    return std::sqrt(std::max(0.0, 1.0 - a * a));
}

double NoiseSchedule::log_snr(double t) const {
    if (t <= 0.0) throw std::domain_error("log_snr: infinite at t=0 (sigma=0)");
    check_time(t, 0.0, 1.0, "log_snr");
    return std::log(alpha(t) / sigma(t));
}

std::pair<double, double> NoiseSchedule::drift_diffusion(double t) const {
    check_time(t, 0.0, 1.0, "drift_diffusion");
    double f = -0.5 * beta(t);  // d log alpha / dt
    double a2 = alpha(t) * alpha(t);
    double s2 = 1.0 - a2;
    // d sigma^2/dt = -d alpha^2/dt = -2 f alpha^2
    double g2 = -2.0 * f * a2 - 2.0 * f * s2;
    return {f, g2};
}

NoiseSchedule paper_beta_schedule() { return NoiseSchedule(0.002, 1.0); }

TimeGrid karras_grid(double epsilon, double T, int N, double rho) {
    if (!(0.0 < epsilon && epsilon < T))
        throw std::invalid_argument("karras_grid: need 0 < epsilon < T");
    if (N < 2) throw std::invalid_argument("karras_grid: need N >= 2");
    if (!(rho > 0.0)) throw std::invalid_argument("karras_grid: need rho > 0");
    TimeGrid g;
    g.epsilon = epsilon;
    g.T = T;
    g.N = N;
    g.rho = rho;
    g.times.resize(N);
    double e_r = std::pow(epsilon, 1.0 / rho);
    double T_r = std::pow(T, 1.0 / rho);
    for (int i = 0; i < N; ++i) {
        double u = e_r + (static_cast<double>(i) / (N - 1)) * (T_r - e_r);
        g.times[i] = std::pow(u, rho);
    }
    g.times.front() = epsilon;
    g.times.back() = T;
    return g;
}

std::pair<double, double> skip_coeffs(double t, double eta) {
    if (t < 0.0) throw std::domain_error("skip_coeffs: t < 0");
    if (!(eta > 0.0)) throw std::invalid_argument("skip_coeffs: eta <= 0");
    double u = 10.0 * t;
    double c_skip = eta * eta / (u * u + eta * eta);
    double c_out = u / std::sqrt(u * u + eta * eta);
    return {c_skip, c_out};
}

Mat perturb(const Mat& x_eps, double t, const Mat& z, const NoiseSchedule& s) {
    if (x_eps.rows() != z.rows() || x_eps.cols() != z.cols())
        throw std::invalid_argument("perturb: shape mismatch");
    return s.alpha(t) * x_eps + s.sigma(t) * z;
}

Mat dpmpp_step(const Mat& x_t, double t, double t_prev, const Mat& x0_hat,
               const NoiseSchedule& s) {
    if (!(0.0 < t_prev && t_prev < t && t <= 1.0))
        throw std::invalid_argument("dpmpp_step: need 0 < t_prev < t <= 1");
    if (x_t.rows() != x0_hat.rows() || x_t.cols() != x0_hat.cols())
        throw std::invalid_argument("dpmpp_step: shape mismatch");
    double h = s.log_snr(t_prev) - s.log_snr(t);
    double scale = s.sigma(t_prev) / s.sigma(t);
    double coef = -s.alpha(t_prev) * (std::exp(-h) - 1.0);
    return scale * x_t + coef * x0_hat;
}

}  // namespace mlct
