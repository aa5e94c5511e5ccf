#pragma once

// Path functionals and ensemble statistics: running time averages,
// per-time means and standard errors, occupation frequencies over
// rectangles, moment estimates, and log-decay slopes.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "forest/sde.hpp"

namespace forest {

struct Series {
    std::vector<double> times;
    std::vector<double> values;
};

inline double obs_u(const State& s) { return s.u; }
inline double obs_v(const State& s) { return s.v; }
inline double obs_v2(const State& s) { return s.v * s.v; }
inline std::function<double(const State&)> obs_indicator_v_ge(double theta) {
    return [theta](const State& s) { return s.v >= theta ? 1.0 : 0.0; };
}

namespace detail {

struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

// Linear interpolation of a trajectory state at time t; t must lie within
// the stored grid.
inline State state_at(const Trajectory& traj, double t) {
    const auto& ts = traj.times;
    if (ts.empty() || t < ts.front() - 1e-12 || t > ts.back() + 1e-12)
        throw std::out_of_range("sample time outside trajectory horizon");
    const auto it = std::lower_bound(ts.begin(), ts.end(), t);
    if (it == ts.begin()) return traj.states.front();
    if (it == ts.end()) return traj.states.back();
    const std::size_t j = static_cast<std::size_t>(it - ts.begin());
    const double t1 = ts[j - 1], t2 = ts[j];
    if (t2 == t1) return traj.states[j];
    const double w = (t - t1) / (t2 - t1);
    const State& s1 = traj.states[j - 1];
    const State& s2 = traj.states[j];
    return {s1.u + w * (s2.u - s1.u), s1.v + w * (s2.v - s1.v)};
}

}  // namespace detail

// Running average (1/t) int_0^t obs ds via the cumulative trapezoid rule.
// The first output is at the second grid point.
template <class Obs>
Series time_average(const Trajectory& traj, Obs&& obs) {
    if (traj.times.size() < 2)
        throw std::invalid_argument("time_average: trajectory needs at least 2 points");
    Series out;
    out.times.reserve(traj.times.size() - 1);
    out.values.reserve(traj.times.size() - 1);
    detail::KahanSum integral;
    double prev_t = traj.times[0];
    double prev_y = obs(traj.states[0]);
    for (std::size_t i = 1; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        const double y = obs(traj.states[i]);
        integral.add(0.5 * (t - prev_t) * (y + prev_y));
        out.times.push_back(t);
        out.values.push_back(integral.sum / t);
        prev_t = t;
        prev_y = y;
    }
    return out;
}

// Integrate one path and record (by linear interpolation) the states at the
// given sorted sample times, without storing the full trajectory.
inline std::vector<State> sampled_states(const ModelParams& p, const State& init,
                                         const SolverConfig& cfg, NoiseStream& stream,
                                         const std::vector<double>& ts) {
    std::vector<State> out;
    out.reserve(ts.size());
    std::size_t k = 0;
    double pt = 0.0;
    State ps = init;
    integrate(p, init, cfg, stream, [&](std::size_t, double t, const State& s) {
        while (k < ts.size() && ts[k] <= t + 1e-12) {
            if (t <= pt) {
                out.push_back(s);
            } else {
                const double w = std::clamp((ts[k] - pt) / (t - pt), 0.0, 1.0);
                out.push_back({ps.u + w * (s.u - ps.u), ps.v + w * (s.v - ps.v)});
            }
            ++k;
        }
        pt = t;
        ps = s;
    });
    if (k < ts.size())
        throw std::out_of_range("sampled_states: sample time outside horizon");
    return out;
}

struct EnsembleStats {
    std::vector<double> times;
    std::vector<double> mean_u, mean_v;
    std::vector<double> se_u, se_v;
    std::size_t n_paths = 0;
};

// Streaming mean/standard-error accumulator over a fixed sample grid.
// Paths may be added in any order; the result depends only on the set.
class EnsembleAccumulator {
public:
    explicit EnsembleAccumulator(std::vector<double> sample_times)
        : times_(std::move(sample_times)),
          su_(times_.size()), sv_(times_.size()),
          su2_(times_.size()), sv2_(times_.size()) {}

    void add(const Trajectory& traj) {
        for (std::size_t i = 0; i < times_.size(); ++i) {
            const State s = detail::state_at(traj, times_[i]);
            su_[i].add(s.u);
            sv_[i].add(s.v);
            su2_[i].add(s.u * s.u);
            sv2_[i].add(s.v * s.v);
        }
        ++n_;
    }

    EnsembleStats finalize() const {
        if (n_ < 2)
            throw std::invalid_argument("ensemble_stats: need at least 2 paths");
        EnsembleStats st;
        st.times = times_;
        st.n_paths = n_;
        const double n = static_cast<double>(n_);
        st.mean_u.resize(times_.size());
        st.mean_v.resize(times_.size());
        st.se_u.resize(times_.size());
        st.se_v.resize(times_.size());
        for (std::size_t i = 0; i < times_.size(); ++i) {
            st.mean_u[i] = su_[i].sum / n;
            st.mean_v[i] = sv_[i].sum / n;
            const double var_u = std::max(0.0, (su2_[i].sum - n * st.mean_u[i] * st.mean_u[i]) / (n - 1.0));
            const double var_v = std::max(0.0, (sv2_[i].sum - n * st.mean_v[i] * st.mean_v[i]) / (n - 1.0));
            st.se_u[i] = std::sqrt(var_u / n);
            st.se_v[i] = std::sqrt(var_v / n);
        }
        return st;
    }

private:
    std::vector<double> times_;
    std::vector<detail::KahanSum> su_, sv_, su2_, sv2_;
    std::size_t n_ = 0;
};

inline EnsembleStats ensemble_stats(std::span<const Trajectory> paths,
                                    std::vector<double> sample_times) {
    EnsembleAccumulator acc(std::move(sample_times));
    for (const auto& traj : paths) acc.add(traj);
    return acc.finalize();
}

struct Rect {
    double u_lo, u_hi, v_lo, v_hi;
    void validate() const {
        if (!(u_lo <= u_hi) || !(v_lo <= v_hi))
            throw std::invalid_argument("Rect: bounds must be ordered lo <= hi");
    }
    bool contains(const State& s) const {
        return s.u >= u_lo && s.u <= u_hi && s.v >= v_lo && s.v <= v_hi;
    }
};

struct OccupancySeries {
    std::vector<double> times;
    std::vector<double> prob;
    Rect rect;
};

class OccupancyAccumulator {
public:
    OccupancyAccumulator(Rect rect, std::vector<double> sample_times)
        : rect_(rect), times_(std::move(sample_times)), hits_(times_.size(), 0) {
        rect_.validate();
    }

    void add(const Trajectory& traj) {
        for (std::size_t i = 0; i < times_.size(); ++i)
            if (rect_.contains(detail::state_at(traj, times_[i]))) ++hits_[i];
        ++n_;
    }

    OccupancySeries finalize() const {
        if (n_ == 0) throw std::invalid_argument("occupancy: no paths");
        OccupancySeries out;
        out.rect = rect_;
        out.times = times_;
        out.prob.resize(times_.size());
        for (std::size_t i = 0; i < times_.size(); ++i)
            out.prob[i] = static_cast<double>(hits_[i]) / static_cast<double>(n_);
        return out;
    }

private:
    Rect rect_;
    std::vector<double> times_;
    std::vector<long> hits_;
    std::size_t n_ = 0;
};

inline OccupancySeries occupancy(std::span<const Trajectory> paths, Rect rect,
                                 std::vector<double> sample_times) {
    OccupancyAccumulator acc(rect, std::move(sample_times));
    for (const auto& traj : paths) acc.add(traj);
    return acc.finalize();
}

// Per-time ensemble estimate of E v^theta, theta >= 1.
inline Series moment_estimate(std::span<const Trajectory> paths, double theta,
                              std::vector<double> sample_times) {
    if (!(theta >= 1.0))
        throw std::invalid_argument("moment_estimate: theta must be >= 1");
    if (paths.empty()) throw std::invalid_argument("moment_estimate: no paths");
    Series out;
    out.times = std::move(sample_times);
    out.values.assign(out.times.size(), 0.0);
    std::vector<detail::KahanSum> sums(out.times.size());
    for (const auto& traj : paths)
        for (std::size_t i = 0; i < out.times.size(); ++i)
            sums[i].add(std::pow(detail::state_at(traj, out.times[i]).v, theta));
    for (std::size_t i = 0; i < out.times.size(); ++i)
        out.values[i] = sums[i].sum / static_cast<double>(paths.size());
    return out;
}

struct DecayRate {
    double slope = 0.0;
    bool degenerate = false;  // window touched the origin; slope is -inf
};

// Least-squares slope of log(u + kappa v) against t over [t_end/2, t_end].
inline DecayRate log_decay_rate(const Trajectory& traj, double kappa) {
    if (traj.times.size() < 2)
        throw std::invalid_argument("log_decay_rate: trajectory needs at least 2 points");
    const double t_end = traj.times.back();
    const double t_lo = 0.5 * t_end;
    detail::KahanSum st, sy, stt, sty;
    std::size_t n = 0;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        if (traj.times[i] < t_lo) continue;
        const double w = traj.states[i].u + kappa * traj.states[i].v;
        if (w <= 0.0)
            return {-std::numeric_limits<double>::infinity(), true};
        const double t = traj.times[i];
        const double y = std::log(w);
        st.add(t);
        sy.add(y);
        stt.add(t * t);
        sty.add(t * y);
        ++n;
    }
    if (n < 2) throw std::invalid_argument("log_decay_rate: window has fewer than 2 points");
    const double nn = static_cast<double>(n);
    const double denom = stt.sum - st.sum * st.sum / nn;
    if (denom == 0.0) return {0.0, false};
    return {(sty.sum - st.sum * sy.sum / nn) / denom, false};
}

}  // namespace forest
