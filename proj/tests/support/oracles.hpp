#pragma once

// Reference implementations used only by tests. They deliberately avoid the
// library's own code paths: brute-force enumeration, plain quadrature and a
// separate random engine.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

// Exhaustive enumeration over every community pattern and every network
// outcome of the remaining nodes (3^n leaf events in total).
inline std::vector<double> enumerate_counts(int n, double pi, double tau) {
    std::vector<double> probs(n + 1, 0.0);
    for (std::uint32_t cmty = 0; cmty < (1u << n); ++cmty) {
        int m = 0;
        double pc = 1.0;
        for (int i = 0; i < n; ++i) {
            if (cmty >> i & 1u) {
                ++m;
                pc *= pi;
            } else {
                pc *= 1.0 - pi;
            }
        }
        if (pc == 0.0) continue;
        const int rest = n - m;
        const double hit = m == 0 ? 0.0 : 1.0 - std::pow(1.0 - tau, m);
        for (std::uint32_t net = 0; net < (1u << rest); ++net) {
            int extra = 0;
            double pn = 1.0;
            for (int i = 0; i < rest; ++i) {
                if (net >> i & 1u) {
                    ++extra;
                    pn *= hit;
                } else {
                    pn *= 1.0 - hit;
                }
            }
            probs[m + extra] += pc * pn;
        }
    }
    return probs;
}

// Composite Simpson rule on the Beta density in s = log t, where the
// integrand t^a (1-t)^(b-1) / B(a, b) is smooth and decays like e^(a s).
inline double beta_cdf_quadrature(double a, double b, double x, int panels = 2000000) {
    const double log_norm = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    const double hi = std::log(x);
    const double lo = hi - 60.0 / a;
    auto f = [&](double s) { return std::exp(a * s + (b - 1.0) * std::log1p(-std::exp(s)) - log_norm); };
    const double h = (hi - lo) / panels;
    double sum = f(lo) + f(hi);
    for (int i = 1; i < panels; ++i) sum += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

struct SimMoments {
    std::vector<double> count_freq;  // empirical P[K = k]
    double mean_k = 0.0, var_k = 0.0;
    double y1 = 0.0;                 // P[Y_1 = 1]
    double y1y2 = 0.0;               // P[Y_1 = 1, Y_2 = 1]
    double mean_k_pos = 0.0, var_k_pos = 0.0, frac_pos = 0.0;
    std::int64_t reps = 0;
};

// Direct generative simulation with std::mt19937_64.
inline SimMoments simulate(int n, double pi, double tau, std::int64_t reps, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    SimMoments s;
    s.reps = reps;
    s.count_freq.assign(n + 1, 0.0);
    std::vector<int> y(n);
    double sk = 0, sk2 = 0, spos = 0, spos2 = 0;
    std::int64_t npos = 0, n_y1 = 0, n_y12 = 0;
    for (std::int64_t r = 0; r < reps; ++r) {
        int m = 0;
        for (int i = 0; i < n; ++i) {
            y[i] = U(eng) < pi;
            m += y[i];
        }
        int k = m;
        if (m > 0) {
            const double hit = 1.0 - std::pow(1.0 - tau, m);
            for (int i = 0; i < n; ++i)
                if (!y[i] && U(eng) < hit) {
                    y[i] = 2;
                    ++k;
                }
        }
        s.count_freq[k] += 1.0;
        sk += k;
        sk2 += double(k) * k;
        if (k > 0) {
            ++npos;
            spos += k;
            spos2 += double(k) * k;
        }
        if (y[0]) ++n_y1;
        if (n > 1 && y[0] && y[1]) ++n_y12;
    }
    const double R = static_cast<double>(reps);
    for (auto& c : s.count_freq) c /= R;
    s.mean_k = sk / R;
    s.var_k = sk2 / R - s.mean_k * s.mean_k;
    s.frac_pos = npos / R;
    if (npos > 0) {
        s.mean_k_pos = spos / npos;
        s.var_k_pos = spos2 / npos - s.mean_k_pos * s.mean_k_pos;
    }
    s.y1 = n_y1 / R;
    s.y1y2 = n_y12 / R;
    return s;
}

}  // namespace oracle
