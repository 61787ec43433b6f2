#include "bbm/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace bbm {

AlphaParams::AlphaParams(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha < std::numbers::sqrt2))
        throw DomainError("alpha must lie strictly inside (0, sqrt 2)");
}

AlphaParams AlphaParams::from_sigma1(double sigma1) {
    if (!(sigma1 > 0.0 && sigma1 < 1.0)) throw DomainError("sigma1 must lie strictly inside (0, 1)");
    return AlphaParams(std::numbers::sqrt2 * (1.0 - sigma1));
}

double centering_kpp(double t) {
    if (!(t > 0.0)) throw DomainError("centering needs t > 0");
    return std::numbers::sqrt2 * t - 3.0 / (2.0 * std::numbers::sqrt2) * std::log(t);
}

double centering_rem(double t) {
    if (!(t > 0.0)) throw DomainError("centering needs t > 0");
    return std::numbers::sqrt2 * t - 1.0 / (2.0 * std::numbers::sqrt2) * std::log(t);
}

double max_position(const ParticleSnapshot& s) {
    return *std::max_element(s.positions.begin(), s.positions.end());
}

double derivative_martingale(const ParticleSnapshot& s) {
    const double front = std::numbers::sqrt2 * s.time;
    const double top = -std::numbers::sqrt2 * (front - max_position(s));
    double sum = 0.0;
    for (double x : s.positions) {
        const double lag = front - x;
        sum += lag * std::exp(-std::numbers::sqrt2 * lag - top);
    }
    return sum * std::exp(top);
}

double log_mckean_martingale(const ParticleSnapshot& s, const AlphaParams& p) {
    const double delta = p.delta();
    const double drift = -s.time * (1.0 + 0.5 * delta * delta);
    // The exponent is increasing in x, so the largest term sits at the max.
    const double top = drift + delta * max_position(s);
    double sum = 0.0;
    for (double x : s.positions) sum += std::exp(drift + delta * x - top);
    return top + std::log(sum);
}

double mckean_martingale(const ParticleSnapshot& s, const AlphaParams& p) {
    return std::exp(log_mckean_martingale(s, p));
}

double mckean_martingale_sigma(const ParticleSnapshot& s, double sigma1) {
    return mckean_martingale(s, AlphaParams::from_sigma1(sigma1));
}

std::uint64_t high_point_count(const ParticleSnapshot& s, const AlphaParams& p) {
    const double level = p.delta() * s.time;
    return static_cast<std::uint64_t>(
        std::count_if(s.positions.begin(), s.positions.end(), [level](double x) { return x >= level; }));
}

LocalizedCounts localized_counts(const ParticleSnapshot& s, const AlphaParams& p) {
    if (!s.barrier_exceeded) throw ConfigError("localized_counts needs a snapshot simulated with a barrier");
    const double level = p.delta() * s.time;
    LocalizedCounts out;
    const auto& flags = *s.barrier_exceeded;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.positions[i] < level) continue;
        if (flags[i]) ++out.z_gt;
        else ++out.z_le;
    }
    return out;
}

double recentered_max(const ParticleSnapshot& s, Centering centering) {
    const double top = max_position(s);
    switch (centering) {
        case Centering::kpp: return top - centering_kpp(s.time);
        case Centering::rem: return top - centering_rem(s.time);
        case Centering::none: break;
    }
    return top;
}

MartingaleTrace make_trace(const std::vector<ParticleSnapshot>& snapshots, const std::vector<AlphaParams>& alphas) {
    MartingaleTrace tr;
    const std::size_t na = alphas.size();
    for (const auto& a : alphas) tr.alphas.push_back(a.alpha());
    tr.mckean.resize(na);
    tr.count.resize(na);
    tr.count_le.resize(na);
    tr.count_gt.resize(na);
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& s : snapshots) {
        tr.times.push_back(s.time);
        tr.n.push_back(s.size());
        tr.max.push_back(max_position(s));
        tr.derivative.push_back(derivative_martingale(s));
        for (std::size_t a = 0; a < na; ++a) {
            const std::uint64_t z = high_point_count(s, alphas[a]);
            const LocalizedCounts loc = s.barrier_exceeded ? localized_counts(s, alphas[a]) : LocalizedCounts{z, 0};
            tr.mckean[a].push_back(mckean_martingale(s, alphas[a]));
            tr.count[a].push_back(z);
            tr.count_le[a].push_back(loc.z_le);
            tr.count_gt[a].push_back(loc.z_gt);
        }
        tr.max_kpp.push_back(s.time > 0.0 ? recentered_max(s, Centering::kpp) : nan);
        tr.max_rem.push_back(s.time > 0.0 ? recentered_max(s, Centering::rem) : nan);
    }
    return tr;
}

void write_trace_csv(std::ostream& out, const MartingaleTrace& tr) {
    char buf[48];
    auto real = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    auto label = [&buf](double a) {
        std::snprintf(buf, sizeof buf, "%g", a);
        return std::string(buf);
    };
    out << "time,n,max,z_derivative";
    for (double a : tr.alphas) {
        const std::string l = label(a);
        out << ",y_alpha_" << l << ",count_" << l << ",count_le_" << l << ",count_gt_" << l;
    }
    out << ",max_kpp,max_rem\n";
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        out << real(tr.times[i]) << ',' << tr.n[i] << ',' << real(tr.max[i]) << ',' << real(tr.derivative[i]);
        for (std::size_t a = 0; a < tr.alphas.size(); ++a) {
            out << ',' << real(tr.mckean[a][i]) << ',' << tr.count[a][i] << ',' << tr.count_le[a][i] << ','
                << tr.count_gt[a][i];
        }
        out << ',' << real(tr.max_kpp[i]) << ',' << real(tr.max_rem[i]) << '\n';
    }
}

}  // namespace bbm
