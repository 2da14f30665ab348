#include "funess/randomwalk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "funess/error.hpp"
#include "funess/kernels.hpp"
#include "funess/rng.hpp"

namespace funess {

WalkParams make_walk_params(const FunessParams& base, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        fail(ErrorCode::OutOfRange, "walk rate lambda must be finite and non-negative");
    }
    return WalkParams{base, lambda};
}

namespace {

void require_grid(std::span<const double> grid, double t0, double horizon) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < t0 || grid[i] > t0 + horizon) fail(ErrorCode::OutOfWindow, "grid point outside the horizon");
        if (i > 0 && grid[i] < grid[i - 1]) fail(ErrorCode::InvalidArgument, "grid must be ascending");
    }
}

/// Stationary probability of state 0 under Q^(l), and its initial offset.
struct ConditionedChain {
    double pi;
    double offset;  // 1[l == 0] - pi
};

ConditionedChain conditioned_chain(std::size_t l, const FunessParams& p) {
    const double pi = l == 0 ? p.k() : 1.0 - p.r();
    return {pi, (l == 0 ? 1.0 : 0.0) - pi};
}

}  // namespace

WalkSample sample_walk(const WalkParams& w, double horizon, std::span<const double> grid, std::uint64_t seed,
                       std::uint64_t stream, WalkReadout readout) {
    const FunessParams& p = w.base;
    require_grid(grid, p.t0(), horizon);
    const Trajectory path = sample_trajectory(p, horizon, seed, stream);

    WalkSample out;
    out.grid.assign(grid.begin(), grid.end());
    out.values.resize(grid.size());
    out.initial_value = p.value(path.initial_state);

    RandomStream clock(seed, stream, StreamPurpose::PoissonClock);
    RandomStream draws(seed, stream, StreamPurpose::IncrementDraw);
    const double end = p.t0() + horizon;
    const Eigen::Vector2d q(p.q1(), p.q2());

    double s = out.initial_value;
    std::size_t g = 0;
    double epoch = p.t0();
    for (;;) {
        epoch += clock.exponential(w.lambda);
        // Grid points strictly before the epoch see the pre-jump value.
        while (g < grid.size() && grid[g] < epoch) out.values[g++] = s;
        if (!(epoch <= end)) break;
        out.jump_epochs.push_back(epoch);
        std::size_t state;
        if (readout == WalkReadout::Trajectory) {
            state = read_state(path, epoch);
        } else {
            const double p_first = (lambda_initial(epoch - p.t0(), p) * Eigen::VectorXd(q))(0);
            state = draws.uniform() < p_first ? 0 : 1;
        }
        s += p.value(state);
    }
    while (g < grid.size()) out.values[g++] = s;
    return out;
}

std::vector<WalkSample> simulate_walk_ensemble(const WalkParams& w, double horizon, std::span<const double> grid,
                                               std::size_t n, std::uint64_t seed, std::size_t threads,
                                               WalkReadout readout) {
    std::vector<WalkSample> out(n);
    parallel_for(n, threads, [&](std::size_t i) { out[i] = sample_walk(w, horizon, grid, seed, i, readout); });
    return out;
}

WalkMoments walk_moments_analytic(double t, const WalkParams& w) {
    const FunessParams& p = w.base;
    if (t < p.t0()) fail(ErrorCode::TimeOrder, "walk moments require t >= t0");
    const double k = p.k(), r = p.r(), x1 = p.x1(), x2 = p.x2();
    const double m0 = x1 * p.q1() + x2 * p.q2();
    const double s0 = x1 * x1 * p.q1() + x2 * x2 * p.q2();
    const double T = t - p.t0();
    const double relax = (w.lambda / p.alpha()) * (1.0 - std::exp(-p.alpha() * T));

    WalkMoments m;
    m.M1 = (1.0 - r) * x1 + (1.0 - k) * x2;
    m.M2 = (1.0 - r) * x1 * x1 + (1.0 - k) * x2 * x2;
    m.mean = m0 + w.lambda * (m.M1 + (k + r - 1.0) * m0) * T + ((2.0 - k - r) * m0 - m.M1) * relax;
    m.variance = (s0 - m0 * m0) + w.lambda * (m.M2 + (k + r - 1.0) * s0) * T + ((2.0 - k - r) * s0 - m.M2) * relax;
    m.d_eff = effective_diffusion(w);
    return m;
}

double effective_diffusion(const WalkParams& w) {
    const FunessParams& p = w.base;
    const double M2 = (1.0 - p.r()) * p.x1() * p.x1() + (1.0 - p.k()) * p.x2() * p.x2();
    const double s0 = p.x1() * p.x1() * p.q1() + p.x2() * p.x2() * p.q2();
    return 0.5 * w.lambda * (M2 + (p.k() + p.r() - 1.0) * s0);
}

double walk_variance_correlated(double t, const WalkParams& w) {
    const FunessParams& p = w.base;
    if (t < p.t0()) fail(ErrorCode::TimeOrder, "walk moments require t >= t0");
    const double a = p.alpha();
    const double T = t - p.t0();
    const double E = std::exp(-a * T);
    const double x1 = p.x1(), x2 = p.x2(), gap = x1 - x2, lam = w.lambda;

    double cond_mean[2];
    double cond_var[2];
    for (std::size_t l = 0; l < 2; ++l) {
        const auto [pi, c] = conditioned_chain(l, p);
        // int_0^T P(X_u = x1 | l) du
        const double occupied = pi * T + c * (1.0 - E) / a;
        // Var int_0^T 1[X_u = x1] du for the chain started at l.
        const double var_time =
            (2.0 / a) * (pi * (1.0 - pi) * (T - (1.0 - E) / a) + c * (1.0 - 2.0 * pi) * ((1.0 - E) / a - T * E) -
                         c * c * ((1.0 - E * E) / (2.0 * a) - E * (1.0 - E) / a));
        const double mean_area = x2 * T + gap * occupied;
        const double mean_sq_area = x2 * x2 * T + (x1 * x1 - x2 * x2) * occupied;
        cond_mean[l] = p.value(l) + lam * mean_area;
        cond_var[l] = lam * mean_sq_area + lam * lam * gap * gap * var_time;
    }
    const double mean = p.q1() * cond_mean[0] + p.q2() * cond_mean[1];
    return p.q1() * cond_var[0] + p.q2() * cond_var[1] + p.q1() * (cond_mean[0] - mean) * (cond_mean[0] - mean) +
           p.q2() * (cond_mean[1] - mean) * (cond_mean[1] - mean);
}

double effective_diffusion_correlated(const WalkParams& w) {
    const FunessParams& p = w.base;
    const double x1 = p.x1(), x2 = p.x2(), gap = x1 - x2, lam = w.lambda;
    double slope[2];
    double drift[2];
    for (std::size_t l = 0; l < 2; ++l) {
        const double pi = conditioned_chain(l, p).pi;
        drift[l] = lam * (x2 + gap * pi);
        slope[l] = lam * (x2 * x2 + (x1 * x1 - x2 * x2) * pi) + lam * lam * gap * gap * 2.0 * pi * (1.0 - pi) / p.alpha();
    }
    // Different drifts per initial state make the spread ballistic.
    if (p.q1() > 0.0 && p.q2() > 0.0 && drift[0] != drift[1]) return std::numeric_limits<double>::infinity();
    return 0.5 * (p.q1() * slope[0] + p.q2() * slope[1]);
}

double LatticeDistribution::total() const {
    long double acc = 0.0L;
    for (double m : mass) acc += m;
    return static_cast<double>(acc);
}

double LatticeDistribution::mean() const {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < mass.size(); ++i) acc += static_cast<long double>(value(i)) * mass[i];
    return static_cast<double>(acc);
}

double LatticeDistribution::variance() const {
    const double mu = mean();
    long double acc = 0.0L;
    for (std::size_t i = 0; i < mass.size(); ++i) {
        const long double d = static_cast<long double>(value(i)) - mu;
        acc += d * d * mass[i];
    }
    return static_cast<double>(acc);
}

namespace {

struct LatticeSteps {
    double spacing;
    std::int64_t n1;
    std::int64_t n2;
};

LatticeSteps lattice_steps(double x1, double x2) {
    if (x1 == 0.0 && x2 == 0.0) return {1.0, 0, 0};
    if (x2 == 0.0) return {std::abs(x1), x1 > 0 ? 1 : -1, 0};
    if (x1 == 0.0) return {std::abs(x2), 0, x2 > 0 ? 1 : -1};
    const double ratio = x1 / x2;
    for (std::int64_t den = 1; den <= 1000; ++den) {
        const double num = std::round(ratio * static_cast<double>(den));
        if (std::abs(num / static_cast<double>(den) - ratio) <= 1e-12 * std::abs(ratio)) {
            const double h = std::abs(x2) / static_cast<double>(den);
            return {h, static_cast<std::int64_t>(std::llround(x1 / h)), static_cast<std::int64_t>(std::llround(x2 / h))};
        }
    }
    fail(ErrorCode::IncommensurateSteps, "x1/x2 is not a ratio of integers with denominator <= 1000");
}

LatticeDistribution integrate_lattice(double t, const WalkParams& w, double step, const LatticeSteps& steps,
                                      std::int64_t lo, std::int64_t hi,
                                      const std::vector<MasterCheckpoint>& marginal) {
    const FunessParams& p = w.base;
    const auto cells = static_cast<std::size_t>(hi - lo + 1);
    LatticeDistribution dist;
    dist.time = t;
    dist.spacing = steps.spacing;
    dist.first_index = lo;
    dist.mass.assign(cells, 0.0);
    auto deposit = [&](std::int64_t idx, double m) {
        if (idx >= lo && idx <= hi) dist.mass[static_cast<std::size_t>(idx - lo)] += m;
    };
    deposit(steps.n1, p.q1());
    deposit(steps.n2, p.q2());

    const std::size_t n_steps = (marginal.size() - 1) / 2;
    const double h = n_steps == 0 ? 0.0 : (t - p.t0()) / static_cast<double>(n_steps);
    const double lam = w.lambda;

    std::vector<double> k1(cells), k2(cells), k3(cells), k4(cells), tmp(cells);
    auto rhs = [&](const Eigen::Vector2d& px, const std::vector<double>& P, std::vector<double>& out) {
        for (std::size_t i = 0; i < cells; ++i) {
            const auto idx = lo + static_cast<std::int64_t>(i);
            const std::int64_t from1 = idx - steps.n1;
            const std::int64_t from2 = idx - steps.n2;
            double gain = 0.0;
            if (from1 >= lo && from1 <= hi) gain += px(0) * P[static_cast<std::size_t>(from1 - lo)];
            if (from2 >= lo && from2 <= hi) gain += px(1) * P[static_cast<std::size_t>(from2 - lo)];
            out[i] = lam * (gain - P[i]);
        }
    };
    auto& P = dist.mass;
    for (std::size_t s = 0; s < n_steps; ++s) {
        const Eigen::Vector2d& p_start = marginal[2 * s].p;
        const Eigen::Vector2d& p_mid = marginal[2 * s + 1].p;
        const Eigen::Vector2d& p_end = marginal[2 * s + 2].p;
        rhs(p_start, P, k1);
        for (std::size_t i = 0; i < cells; ++i) tmp[i] = P[i] + 0.5 * h * k1[i];
        rhs(p_mid, tmp, k2);
        for (std::size_t i = 0; i < cells; ++i) tmp[i] = P[i] + 0.5 * h * k2[i];
        rhs(p_mid, tmp, k3);
        for (std::size_t i = 0; i < cells; ++i) tmp[i] = P[i] + h * k3[i];
        rhs(p_end, tmp, k4);
        for (std::size_t i = 0; i < cells; ++i) P[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    (void)step;

    const std::int64_t edge = std::max<std::int64_t>({1, std::abs(steps.n1), std::abs(steps.n2)});
    double boundary = std::max(0.0, 1.0 - dist.total());
    for (std::int64_t e = 0; e < edge && e < static_cast<std::int64_t>(cells); ++e) {
        boundary += std::abs(P[static_cast<std::size_t>(e)]) + std::abs(P[cells - 1 - static_cast<std::size_t>(e)]);
    }
    dist.boundary_mass = boundary;
    return dist;
}

}  // namespace

LatticeDistribution walk_distribution_oracle(double t, const WalkParams& w, double step,
                                             std::optional<LatticeBounds> bounds) {
    const FunessParams& p = w.base;
    if (t < p.t0()) fail(ErrorCode::TimeOrder, "walk_distribution_oracle requires t >= t0");
    if (w.lambda * step > 0.1) fail(ErrorCode::StepTooLarge, "lattice step exceeds 0.1/lambda");
    const LatticeSteps steps = lattice_steps(p.x1(), p.x2());
    const auto marginal = propagate_master_half_steps(Eigen::Vector2d(p.q1(), p.q2()), t, step, p);

    std::int64_t lo, hi;
    if (bounds) {
        if (!(bounds->z_max >= bounds->z_min)) fail(ErrorCode::InvalidArgument, "empty lattice bounds");
        lo = static_cast<std::int64_t>(std::floor(bounds->z_min / steps.spacing));
        hi = static_cast<std::int64_t>(std::ceil(bounds->z_max / steps.spacing));
    } else {
        const auto m = walk_moments_analytic(t, w);
        const double sd = std::sqrt(std::max(0.0, m.variance)) / steps.spacing;
        const double centre = m.mean / steps.spacing;
        lo = static_cast<std::int64_t>(std::floor(centre - 8.0 * sd)) - 8;
        hi = static_cast<std::int64_t>(std::ceil(centre + 8.0 * sd)) + 8;
    }
    lo = std::min({lo, steps.n1, steps.n2});
    hi = std::max({hi, steps.n1, steps.n2});

    constexpr std::int64_t kMaxCells = std::int64_t{1} << 22;
    if (hi - lo + 1 > kMaxCells) {
        fail(ErrorCode::MassLeak, "the walk spreads over more than 2^22 lattice cells by t");
    }
    for (;;) {
        auto dist = integrate_lattice(t, w, step, steps, lo, hi, marginal);
        if (dist.boundary_mass < 1e-10) return dist;
        const std::int64_t width = hi - lo + 1;
        if (2 * width > kMaxCells) {
            fail(ErrorCode::MassLeak, "boundary mass " + std::to_string(dist.boundary_mass) +
                                          " still above 1e-10 at the maximum lattice size");
        }
        lo -= width / 2 + 1;
        hi += width / 2 + 1;
    }
}

WalkMomentEstimate estimate_walk_moments(std::span<const WalkSample> samples, double t) {
    if (samples.size() < 1000) fail(ErrorCode::InvalidArgument, "estimate_walk_moments needs at least 1000 samples");
    const auto& grid = samples.front().grid;
    const auto it = std::find_if(grid.begin(), grid.end(),
                                 [t](double g) { return std::abs(g - t) <= 1e-12 * std::max(1.0, std::abs(t)); });
    if (it == grid.end()) fail(ErrorCode::GridMismatch, "t is not a grid point");
    const auto idx = static_cast<std::size_t>(it - grid.begin());

    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (const auto& s : samples) {
        if (s.grid.size() != grid.size() || s.grid[idx] != grid[idx]) {
            fail(ErrorCode::GridMismatch, "samples do not share a common grid");
        }
        mean += s.values[idx];
    }
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (const auto& s : samples) {
        const double d = s.values[idx] - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    const double var = m2 * n / (n - 1.0);
    WalkMomentEstimate out;
    out.mean = {mean, std::sqrt(var / n), samples.size()};
    out.variance = {var, std::sqrt(std::max(0.0, m4 - m2 * m2) / n), samples.size()};
    return out;
}

namespace {

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

std::vector<double> variances_at(std::span<const WalkSample> samples, const std::vector<std::size_t>& cols) {
    std::vector<double> out;
    out.reserve(cols.size());
    const double n = static_cast<double>(samples.size());
    for (auto c : cols) {
        double m = 0.0, m2 = 0.0;
        for (const auto& s : samples) m += s.values[c];
        m /= n;
        for (const auto& s : samples) m2 += (s.values[c] - m) * (s.values[c] - m);
        out.push_back(m2 / (n - 1.0));
    }
    return out;
}

}  // namespace

EstimateWithError fit_variance_slope(std::span<const WalkSample> samples, double t_lo, double t_hi) {
    constexpr std::size_t kBatches = 20;
    if (samples.size() < 2 * kBatches) fail(ErrorCode::InvalidArgument, "too few samples for a slope fit");
    const auto& grid = samples.front().grid;
    std::vector<std::size_t> cols;
    std::vector<double> times;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] >= t_lo - 1e-12 && grid[i] <= t_hi + 1e-12) {
            cols.push_back(i);
            times.push_back(grid[i]);
        }
    }
    if (cols.size() < 2) fail(ErrorCode::GridMismatch, "need at least two grid points in the fit window");
    for (const auto& s : samples) {
        if (s.grid.size() != grid.size()) fail(ErrorCode::GridMismatch, "samples do not share a common grid");
    }
    EstimateWithError out;
    out.n = samples.size();
    out.value = ols_slope(times, variances_at(samples, cols));

    const std::size_t per = samples.size() / kBatches;
    double bm = 0.0, bm2 = 0.0;
    for (std::size_t b = 0; b < kBatches; ++b) {
        const double slope = ols_slope(times, variances_at(samples.subspan(b * per, per), cols));
        bm += slope;
        bm2 += slope * slope;
    }
    bm /= kBatches;
    const double var_batch = std::max(0.0, (bm2 - kBatches * bm * bm) / (kBatches - 1.0));
    out.std_error = std::sqrt(var_batch / kBatches);
    return out;
}

}  // namespace funess
