#ifndef SARSLICK_GMF_HPP
#define SARSLICK_GMF_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sarslick/errors.hpp"

namespace sarslick {

inline constexpr double kWindSpeedFloor = 0.2;    // m/s
inline constexpr double kWindSpeedCeiling = 50.0; // m/s
inline constexpr double kIncidenceMin = 18.0;     // degrees
inline constexpr double kIncidenceMax = 50.0;     // degrees

inline double normalize_degrees(double d) {
    d = std::fmod(d, 360.0);
    if (d < 0.0) d += 360.0;
    return d;
}

// Wind/geometry inputs to a C-band geophysical model function.
// relative_direction is the wind-to-antenna azimuth difference, 0 = upwind.
struct GmfInputs {
    double wind_speed;          // m/s, (0, 50]
    double relative_direction;  // degrees, normalized to [0, 360)
    double incidence_angle;     // degrees, [18, 50]

    void validate() const {
        if (!(wind_speed > 0.0) || wind_speed > kWindSpeedCeiling)
            throw DomainError("wind_speed", "must be in (0, 50] m/s");
        if (incidence_angle < kIncidenceMin || incidence_angle > kIncidenceMax)
            throw DomainError("incidence_angle", "must be in [18, 50] degrees");
        if (!std::isfinite(relative_direction))
            throw DomainError("relative_direction", "must be finite");
    }
};

struct Nrcs {
    double sigma0;  // linear power, > 0
};

class Gmf {
  public:
    virtual ~Gmf() = default;
    virtual std::string name() const = 0;
    virtual Nrcs forward(const GmfInputs& in) const = 0;
};

// CMOD5.N: neutral-wind C-band model, harmonic form
// sigma0 = B0 * (1 + B1*cos(phi) + B2*cos(2*phi))^1.6
// with the 28 published coefficients.
class Cmod5n final : public Gmf {
  public:
    std::string name() const override { return "cmod5n"; }

    Nrcs forward(const GmfInputs& in) const override {
        in.validate();
        return {evaluate(in.wind_speed, in.relative_direction, in.incidence_angle)};
    }

    static double evaluate(double v, double phi, double theta) {
        // c[1..28], c[0] unused
        static constexpr double c[29] = {
            0.0,
            -0.6878, -0.7957,  0.3380, -0.1728,  0.0000,
             0.0040,  0.1103,  0.0159,  6.7329,  2.7713,
            -2.2885,  0.4971, -0.7250,  0.0450,  0.0066,
             0.3222,  0.0120, 22.7000,  2.0813,  3.0000,
             8.3659, -3.3428,  1.3236,  6.2437,  2.3893,
             0.3249,  4.1590,  1.6930};
        constexpr double theta_m = 40.0, theta_hr = 25.0, zpow = 1.6;

        const double y0 = c[19];
        const double pn = c[20];
        const double ya = y0 - (y0 - 1.0) / pn;
        const double yb = 1.0 / (pn * std::pow(y0 - 1.0, pn - 1.0));

        const double fi = phi * M_PI / 180.0;
        const double csfi = std::cos(fi);
        const double cs2fi = 2.0 * csfi * csfi - 1.0;

        const double x = (theta - theta_m) / theta_hr;
        const double xx = x * x;

        const double a0 = c[1] + c[2] * x + c[3] * xx + c[4] * x * xx;
        const double a1 = c[5] + c[6] * x;
        const double a2 = c[7] + c[8] * x;
        const double gam = c[9] + c[10] * x + c[11] * xx;
        const double s0 = c[12] + c[13] * x;
        const double s = a2 * v;

        double a3 = 1.0 / (1.0 + std::exp(-s0));
        if (s < s0)
            a3 *= std::pow(s / s0, s0 * (1.0 - a3));
        else
            a3 = 1.0 / (1.0 + std::exp(-s));
        const double b0 = std::pow(a3, gam) * std::pow(10.0, a0 + a1 * v);

        double b1 = c[15] * v * (0.5 + x - std::tanh(4.0 * (x + c[16] + c[17] * v)));
        b1 = (c[14] * (1.0 + x) - b1) / (std::exp(0.34 * (v - c[18])) + 1.0);

        const double v0 = c[21] + c[22] * x + c[23] * xx;
        const double d1 = c[24] + c[25] * x + c[26] * xx;
        const double d2 = c[27] + c[28] * x;
        double v2 = v / v0 + 1.0;
        if (v2 < y0) v2 = ya + yb * std::pow(v2 - 1.0, pn);
        const double b2 = (-d1 + d2 * v2) * std::exp(-v2);

        return b0 * std::pow(1.0 + b1 * csfi + b2 * cs2fi, zpow);
    }
};

// GMF registry keyed by name so additional variants can be plugged in.
inline const std::map<std::string, std::shared_ptr<const Gmf>>& gmf_registry() {
    static const std::map<std::string, std::shared_ptr<const Gmf>> reg = {
        {"cmod5n", std::make_shared<Cmod5n>()},
    };
    return reg;
}

inline std::shared_ptr<const Gmf> find_gmf(const std::string& name) {
    auto it = gmf_registry().find(name);
    if (it == gmf_registry().end())
        throw ConfigError("unknown GMF variant: " + name);
    return it->second;
}

enum class ClampFlag { None, Low, High };

struct InvertResult {
    double speed;  // m/s, in [0.2, 50]
    ClampFlag flag = ClampFlag::None;
};

// Scalar inversion of the GMF in wind speed at fixed (phi, theta).
// Bracketing bisection on [0.2, 50]; the GMF is monotone increasing in v
// over the operational range, so convergence is guaranteed. Requested
// sigma0 outside the achievable range clamps to the floor/ceiling speed.
inline InvertResult invert_speed(const Gmf& gmf, double sigma0, double phi,
                                 double theta,
                                 double rel_width_tol = 1e-8) {
    if (!(sigma0 > 0.0) || !std::isfinite(sigma0))
        throw DomainError("sigma0", "must be positive and finite");
    phi = normalize_degrees(phi);
    if (theta < kIncidenceMin || theta > kIncidenceMax)
        throw DomainError("incidence_angle", "must be in [18, 50] degrees");

    auto f = [&](double v) { return gmf.forward({v, phi, theta}).sigma0; };
    if (sigma0 <= f(kWindSpeedFloor)) return {kWindSpeedFloor, ClampFlag::Low};

    // The curve saturates (and can dip) above ~30 m/s, so bracket the
    // leftmost crossing with a coarse ascending scan first; bisection then
    // runs on a locally monotone segment.
    double lo = kWindSpeedFloor, hi = kWindSpeedCeiling;
    bool bracketed = false;
    double prev_v = kWindSpeedFloor;
    for (double v = 0.7; !bracketed; v += 0.5) {
        if (v > kWindSpeedCeiling) v = kWindSpeedCeiling;
        if (f(v) >= sigma0) {
            lo = prev_v;
            hi = v;
            bracketed = true;
        } else if (v >= kWindSpeedCeiling) {
            break;
        }
        prev_v = v;
    }
    if (!bracketed) return {kWindSpeedCeiling, ClampFlag::High};
    while (hi - lo > rel_width_tol * hi) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) < sigma0)
            lo = mid;
        else
            hi = mid;
    }
    return {0.5 * (lo + hi), ClampFlag::None};
}

// Precomputed sigma0 table over (theta, phi, v), used for per-pixel wind
// retrieval. Inversion interpolates the per-node monotone sigma0(v) curves
// and blends bilinearly in (theta, phi). Construction verifies the
// interpolated inversion stays within `tolerance_mps` of the exact solver
// on random interior probes.
class InversionLut {
  public:
    InversionLut(std::shared_ptr<const Gmf> gmf, std::vector<double> theta_grid,
                 std::vector<double> phi_grid, std::vector<double> v_grid,
                 double tolerance_mps = 0.1, int validation_probes = 300)
        : gmf_(std::move(gmf)), theta_(std::move(theta_grid)),
          phi_(std::move(phi_grid)), v_(std::move(v_grid)),
          tolerance_(tolerance_mps) {
        check_grid(theta_, "theta grid");
        check_grid(phi_, "phi grid");
        check_grid(v_, "v grid");
        table_.resize(theta_.size() * phi_.size() * v_.size());
        for (std::size_t it = 0; it < theta_.size(); ++it)
            for (std::size_t ip = 0; ip < phi_.size(); ++ip) {
                for (std::size_t iv = 0; iv < v_.size(); ++iv)
                    table_[idx(it, ip, iv)] =
                        gmf_->forward({v_[iv], normalize_degrees(phi_[ip]),
                                       theta_[it]}).sigma0;
                // The GMF saturates and dips slightly above ~30 m/s at low
                // incidence. Keep each curve non-decreasing so inversion
                // resolves to the ascending branch, matching the bisection
                // solver.
                for (std::size_t iv = 1; iv < v_.size(); ++iv)
                    table_[idx(it, ip, iv)] = std::max(table_[idx(it, ip, iv)],
                                                       table_[idx(it, ip, iv - 1)]);
            }
        validate_accuracy(validation_probes);
    }

    // Interpolated inverse; theta and phi must lie inside the table.
    double invert(double sigma0, double phi, double theta) const {
        if (theta < theta_.front() || theta > theta_.back())
            throw DomainError("incidence_angle",
                              "outside LUT range, extrapolation refused");
        if (phi < phi_.front() || phi > phi_.back())
            throw DomainError("relative_direction",
                              "outside LUT range, extrapolation refused");
        auto [it0, wt] = cell(theta_, theta);
        auto [ip0, wp] = cell(phi_, phi);
        // Blend the four corner sigma0(v) curves first, then invert the
        // blended curve. Blending inverted speeds instead goes badly wrong
        // near saturation, where one corner may clamp while another does not.
        const double* c00 = &table_[idx(it0, ip0, 0)];
        const double* c01 = &table_[idx(it0, ip0 + 1, 0)];
        const double* c10 = &table_[idx(it0 + 1, ip0, 0)];
        const double* c11 = &table_[idx(it0 + 1, ip0 + 1, 0)];
        auto blended = [&](std::size_t iv) {
            return (1 - wt) * ((1 - wp) * c00[iv] + wp * c01[iv]) +
                   wt * ((1 - wp) * c10[iv] + wp * c11[iv]);
        };
        const std::size_t n = v_.size();
        if (sigma0 <= blended(0)) return v_.front();
        if (sigma0 >= blended(n - 1)) return v_.back();
        std::size_t lo = 0, hi = n - 1;
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            if (blended(mid) < sigma0)
                lo = mid;
            else
                hi = mid;
        }
        double slo = blended(lo), shi = blended(hi);
        double w = (sigma0 - slo) / (shi - slo);
        return v_[lo] + w * (v_[hi] - v_[lo]);
    }

    const std::vector<double>& theta_grid() const { return theta_; }
    const std::vector<double>& phi_grid() const { return phi_; }
    const std::vector<double>& v_grid() const { return v_; }

    // Default table: 0.5 deg theta step over [theta_lo, theta_hi],
    // 2.5 deg phi step over the full circle, geometric v ladder.
    static InversionLut make_default(std::shared_ptr<const Gmf> gmf,
                                     double theta_lo, double theta_hi) {
        theta_lo = std::max(kIncidenceMin, theta_lo - 1.0);
        theta_hi = std::min(kIncidenceMax, theta_hi + 1.0);
        std::vector<double> th;
        for (double t = theta_lo; t < theta_hi + 0.25; t += 0.5)
            th.push_back(std::min(t, theta_hi));
        if (th.back() < theta_hi) th.push_back(theta_hi);
        std::vector<double> ph;
        for (double p = 0.0; p <= 360.0 + 1e-9; p += 2.5) ph.push_back(p);
        std::vector<double> v;
        double vv = kWindSpeedFloor;
        while (vv < kWindSpeedCeiling) {
            v.push_back(vv);
            vv *= 1.03;
        }
        v.push_back(kWindSpeedCeiling);
        return InversionLut(std::move(gmf), std::move(th), std::move(ph),
                            std::move(v));
    }

  private:
    static void check_grid(const std::vector<double>& g, const char* what) {
        if (g.size() < 2)
            throw ConfigError(std::string(what) + ": need at least 2 nodes");
        for (std::size_t i = 1; i < g.size(); ++i)
            if (!(g[i] > g[i - 1]))
                throw ConfigError(std::string(what) + ": must be strictly increasing");
    }

    std::size_t idx(std::size_t it, std::size_t ip, std::size_t iv) const {
        return (it * phi_.size() + ip) * v_.size() + iv;
    }

    static std::pair<std::size_t, double> cell(const std::vector<double>& g,
                                               double x) {
        auto hi = std::upper_bound(g.begin(), g.end(), x);
        std::size_t i = hi == g.begin() ? 0 : (hi - g.begin()) - 1;
        if (i >= g.size() - 1) i = g.size() - 2;
        double w = (x - g[i]) / (g[i + 1] - g[i]);
        return {i, std::clamp(w, 0.0, 1.0)};
    }

    void validate_accuracy(int probes) {
        if (probes <= 0) return;
        // Deterministic LCG probe stream; interior of the table only.
        std::uint64_t state = 0x243f6a8885a308d3ULL;
        auto next = [&]() {
            state = state * 6364136223846793005ULL + 1442695040888963407ULL;
            return static_cast<double>(state >> 11) / 9007199254740992.0;
        };
        double worst = 0.0;
        for (int i = 0; i < probes; ++i) {
            double theta = theta_.front() +
                           next() * (theta_.back() - theta_.front());
            double phi = phi_.front() + next() * (phi_.back() - phi_.front());
            // Probe the [1, 20] m/s operational band.
            double v = 1.0 + next() * 19.0;
            double s = gmf_->forward({v, normalize_degrees(phi), theta}).sigma0;
            double exact = invert_speed(*gmf_, s, phi, theta).speed;
            double approx = invert(s, phi, theta);
            worst = std::max(worst, std::abs(exact - approx));
        }
        if (worst > tolerance_)
            throw ConfigError(
                "inversion LUT too coarse: worst deviation " +
                std::to_string(worst) + " m/s exceeds " +
                std::to_string(tolerance_) + " m/s; use finer grid spacing");
    }

    std::shared_ptr<const Gmf> gmf_;
    std::vector<double> theta_, phi_, v_;
    std::vector<double> table_;
    double tolerance_;
};

}  // namespace sarslick

#endif
