#include "funess/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include "funess/error.hpp"
#include "funess/rng.hpp"

namespace funess {

std::size_t default_thread_count() {
    if (const char* env = std::getenv("FUNESS_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    constexpr std::size_t kChunk = 256;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t begin = next.fetch_add(kChunk);
            if (begin >= n) return;
            const std::size_t end = std::min(n, begin + kChunk);
            for (std::size_t i = begin; i < end; ++i) body(i);
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
}

Trajectory sample_trajectory(const FunessParams& p, double horizon, std::uint64_t seed, std::uint64_t stream) {
    if (!(horizon > 0.0)) fail(ErrorCode::InvalidArgument, "horizon must be positive");
    RandomStream rng(seed, stream, StreamPurpose::Trajectory);

    Trajectory traj;
    traj.t0 = p.t0();
    traj.horizon = horizon;
    traj.initial_state = rng.uniform() < p.q1() ? 0 : 1;

    // Exit rates of the chain conditioned on X_t0.
    const double a = p.alpha();
    const std::array<double, 2> exit_rate =
        traj.initial_state == 0 ? std::array<double, 2>{a * (1.0 - p.k()), a * p.k()}
                                : std::array<double, 2>{a * p.r(), a * (1.0 - p.r())};

    const double end = p.t0() + horizon;
    std::size_t state = traj.initial_state;
    double t = p.t0();
    for (;;) {
        t += rng.exponential(exit_rate[state]);
        if (!(t <= end)) break;
        state ^= 1u;
        traj.jump_times.push_back(t);
        traj.states.push_back(static_cast<std::uint8_t>(state));
    }
    return traj;
}

Ensemble simulate_ensemble(const FunessParams& p, double horizon, std::size_t n, std::uint64_t seed,
                           std::size_t threads) {
    Ensemble ens{p, horizon, std::vector<Trajectory>(n)};
    parallel_for(n, threads, [&](std::size_t i) { ens.paths[i] = sample_trajectory(p, horizon, seed, i); });
    return ens;
}

std::size_t read_state(const Trajectory& traj, double t) {
    if (!(t >= traj.t0 && t <= traj.t0 + traj.horizon)) {
        fail(ErrorCode::OutOfWindow, "time " + std::to_string(t) + " outside the simulated window");
    }
    const auto it = std::upper_bound(traj.jump_times.begin(), traj.jump_times.end(), t);
    const auto jumps = static_cast<std::size_t>(it - traj.jump_times.begin());
    return jumps == 0 ? traj.initial_state : traj.states[jumps - 1];
}

double occupation_fraction(const Trajectory& traj, double a, double b) {
    if (!(b > a)) fail(ErrorCode::InvalidArgument, "occupation window must have positive length");
    read_state(traj, a);
    read_state(traj, b);
    double in_first = 0.0;
    double seg_start = traj.t0;
    std::size_t state = traj.initial_state;
    for (std::size_t i = 0; i <= traj.jump_times.size(); ++i) {
        const double seg_end = i < traj.jump_times.size() ? traj.jump_times[i] : traj.t0 + traj.horizon;
        if (state == 0) {
            const double lo = std::max(seg_start, a);
            const double hi = std::min(seg_end, b);
            if (hi > lo) in_first += hi - lo;
        }
        if (seg_end >= b) break;
        if (i < traj.states.size()) state = traj.states[i];
        seg_start = seg_end;
    }
    return in_first / (b - a);
}

EstimateWithError estimate_marginal(const Ensemble& ens, double t) {
    if (ens.paths.empty()) fail(ErrorCode::InvalidArgument, "empty ensemble");
    std::size_t hits = 0;
    for (const auto& tr : ens.paths) hits += read_state(tr, t) == 0 ? 1 : 0;
    const double n = static_cast<double>(ens.paths.size());
    const double phat = static_cast<double>(hits) / n;
    return {phat, std::sqrt(phat * (1.0 - phat) / n), ens.paths.size()};
}

TransitionEstimate estimate_transition(const Ensemble& ens, double t, double s,
                                       std::optional<std::size_t> initial_state) {
    if (ens.paths.size() < 100) fail(ErrorCode::InvalidArgument, "estimate_transition needs at least 100 paths");
    if (t < s) fail(ErrorCode::TimeOrder, "estimate_transition requires s <= t");
    if (initial_state && *initial_state > 1) fail(ErrorCode::BadIndex, "initial state must be 0 or 1");
    std::array<std::array<std::size_t, 2>, 2> counts{};  // [from][to]
    for (const auto& tr : ens.paths) {
        if (initial_state && tr.initial_state != *initial_state) continue;
        ++counts[read_state(tr, s)][read_state(tr, t)];
    }
    Eigen::MatrixXd m(2, 2);
    Eigen::MatrixXd se(2, 2);
    std::array<std::size_t, 2> column_counts{};
    for (std::size_t from = 0; from < 2; ++from) {
        const std::size_t nk = counts[from][0] + counts[from][1];
        if (nk == 0) fail(ErrorCode::EmptyColumn, "no path occupies state " + std::to_string(from) + " at s");
        column_counts[from] = nk;
        const double p0 = static_cast<double>(counts[from][0]) / static_cast<double>(nk);
        const auto c = static_cast<Eigen::Index>(from);
        m(0, c) = p0;
        m(1, c) = 1.0 - p0;
        se(0, c) = se(1, c) = std::sqrt(p0 * (1.0 - p0) / static_cast<double>(nk));
    }
    return {ColumnStochasticMatrix(std::move(m)), std::move(se), column_counts};
}

namespace {

struct GroupCovariance {
    std::size_t n = 0;
    double value = 0.0;
    double variance = 0.0;  // of the estimator
};

/// Sample covariance of (X_s, X_t) with delta-method variance. Values are
/// shifted by x2 so that x1 == x2 gives exactly zero.
GroupCovariance group_covariance(const Ensemble& ens, double t, double s, std::size_t group) {
    const double gap = ens.params.x1() - ens.params.x2();
    std::vector<double> a;
    std::vector<double> b;
    for (const auto& tr : ens.paths) {
        if (tr.initial_state != group) continue;
        a.push_back(read_state(tr, s) == 0 ? gap : 0.0);
        b.push_back(read_state(tr, t) == 0 ? gap : 0.0);
    }
    GroupCovariance out;
    out.n = a.size();
    if (out.n == 0) return out;
    const double n = static_cast<double>(out.n);
    double ma = 0.0, mb = 0.0, mab = 0.0;
    for (std::size_t i = 0; i < out.n; ++i) {
        ma += a[i];
        mb += b[i];
        mab += a[i] * b[i];
    }
    ma /= n;
    mb /= n;
    mab /= n;
    out.value = mab - ma * mb;
    double psi_mean = 0.0, psi_sq = 0.0;
    for (std::size_t i = 0; i < out.n; ++i) {
        const double psi = a[i] * b[i] - mb * a[i] - ma * b[i];
        psi_mean += psi;
        psi_sq += psi * psi;
    }
    psi_mean /= n;
    out.variance = std::max(0.0, psi_sq / n - psi_mean * psi_mean) / n;
    return out;
}

}  // namespace

CorrelationEstimate estimate_correlation(const Ensemble& ens, double t, double s, std::optional<std::size_t> x0) {
    if (ens.paths.empty()) fail(ErrorCode::InvalidArgument, "empty ensemble");
    if (t < s) fail(ErrorCode::TimeOrder, "estimate_correlation requires s <= t");
    CorrelationEstimate out;
    out.insufficient_burn_in = s - ens.params.t0() < 10.0 / ens.params.alpha();
    if (x0) {
        if (*x0 > 1) fail(ErrorCode::BadIndex, "x0 must be 0 or 1");
        const auto g = group_covariance(ens, t, s, *x0);
        if (g.n == 0) fail(ErrorCode::EmptyColumn, "no path started in the requested state");
        out.estimate = {g.value, std::sqrt(g.variance), g.n};
        return out;
    }
    const double n = static_cast<double>(ens.paths.size());
    double value = 0.0, within = 0.0, second = 0.0;
    for (std::size_t g = 0; g < 2; ++g) {
        const auto cov = group_covariance(ens, t, s, g);
        const double w = static_cast<double>(cov.n) / n;
        value += w * cov.value;
        within += w * w * cov.variance;
        second += w * cov.value * cov.value;
    }
    // Variability of the empirical weights adds (sum w C^2 - (sum w C)^2) / n.
    const double between = std::max(0.0, second - value * value) / n;
    out.estimate = {value, std::sqrt(within + between), ens.paths.size()};
    return out;
}

TripleCounts count_triples(const Ensemble& ens, double s, double t) {
    if (s < ens.params.t0() || t < s) fail(ErrorCode::TimeOrder, "count_triples requires t0 <= s <= t");
    TripleCounts c;
    for (const auto& tr : ens.paths) {
        ++c.n[4 * tr.initial_state + 2 * read_state(tr, s) + read_state(tr, t)];
    }
    c.total = ens.paths.size();
    return c;
}

CmiEstimate estimate_cmi(const TripleCounts& counts) {
    if (counts.total == 0) fail(ErrorCode::InvalidArgument, "no samples");
    std::array<std::size_t, 2> mid{};
    std::array<std::array<std::size_t, 2>, 2> lead{};  // (l, k)
    std::array<std::array<std::size_t, 2>, 2> tail{};  // (k, j)
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t j = 0; j < 2; ++j) {
                const std::size_t v = counts(l, k, j);
                mid[k] += v;
                lead[l][k] += v;
                tail[k][j] += v;
            }
    const double n = static_cast<double>(counts.total);
    std::vector<double> terms;
    std::vector<double> squares;
    std::size_t cells_lkj = 0;
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t j = 0; j < 2; ++j) {
                const std::size_t v = counts(l, k, j);
                if (v == 0) continue;
                ++cells_lkj;
                const double ratio = (static_cast<double>(v) * static_cast<double>(mid[k])) /
                                     (static_cast<double>(lead[l][k]) * static_cast<double>(tail[k][j]));
                const double pr = static_cast<double>(v) / n;
                const double lr = std::log(ratio);
                terms.push_back(pr * lr);
                squares.push_back(pr * lr * lr);
            }
    auto sum = [](std::vector<double>& xs) {
        std::sort(xs.begin(), xs.end());
        long double acc = 0.0L;
        for (double x : xs) acc += x;
        return static_cast<double>(acc);
    };
    auto nonempty = [](const auto& table) {
        std::size_t m = 0;
        for (const auto& row : table)
            for (auto v : row) m += v > 0 ? 1 : 0;
        return m;
    };
    const std::size_t cells_k = (mid[0] > 0 ? 1u : 0u) + (mid[1] > 0 ? 1u : 0u);

    CmiEstimate out;
    out.counts = counts;
    out.plugin = sum(terms);
    // Miller-Madow: each entropy gains (cells - 1) / 2n.
    const double correction = (static_cast<double>(nonempty(lead)) + static_cast<double>(nonempty(tail)) -
                               static_cast<double>(cells_k) - static_cast<double>(cells_lkj)) /
                              (2.0 * n);
    const double corrected = std::max(0.0, out.plugin + correction);
    const double second = sum(squares);
    out.estimate = {corrected, std::sqrt(std::max(0.0, second - out.plugin * out.plugin) / n), counts.total};
    for (const auto& row : lead)
        for (auto v : row) out.sparse_cell = out.sparse_cell || v < 30;
    return out;
}

CmiEstimate estimate_cmi(const Ensemble& ens, double s, double t) {
    if (ens.paths.size() < 10000) fail(ErrorCode::InvalidArgument, "estimate_cmi needs at least 1e4 paths");
    auto out = estimate_cmi(count_triples(ens, s, t));
    out.insufficient_burn_in = s - ens.params.t0() < 10.0 / ens.params.alpha();
    return out;
}

ErgodicityReport ergodicity_diagnostic(const Ensemble& ens, double window, std::optional<double> burn_in) {
    const double alpha = ens.params.alpha();
    if (window < 20.0 / alpha - 1e-12) fail(ErrorCode::InvalidArgument, "window must be at least 20/alpha");
    ErgodicityReport report;
    report.window = window;
    report.burn_in = burn_in.value_or(10.0 / alpha);
    if (report.burn_in < 0.0) fail(ErrorCode::InvalidArgument, "burn-in must be non-negative");
    if (report.burn_in + window > ens.horizon * (1.0 + 1e-12)) {
        fail(ErrorCode::InvalidArgument, "paths are shorter than burn-in + window");
    }
    if (ens.paths.empty()) fail(ErrorCode::InvalidArgument, "empty ensemble");
    const double a = ens.params.t0() + report.burn_in;
    const double b = std::min(a + window, ens.params.t0() + ens.horizon);

    std::array<double, 2> sum{}, sum_sq{};
    std::size_t final_hits = 0;
    for (const auto& tr : ens.paths) {
        const double occ = occupation_fraction(tr, a, b);
        auto& g = report.by_initial_state[tr.initial_state];
        ++g.n;
        sum[tr.initial_state] += occ;
        sum_sq[tr.initial_state] += occ * occ;
        final_hits += read_state(tr, b) == 0 ? 1 : 0;
    }
    for (std::size_t g = 0; g < 2; ++g) {
        auto& grp = report.by_initial_state[g];
        if (grp.n == 0) continue;
        const double n = static_cast<double>(grp.n);
        grp.mean = sum[g] / n;
        const double var = grp.n > 1 ? std::max(0.0, (sum_sq[g] - n * grp.mean * grp.mean) / (n - 1.0)) : 0.0;
        grp.std_error = std::sqrt(var / n);
    }
    const double n = static_cast<double>(ens.paths.size());
    const double phat = static_cast<double>(final_hits) / n;
    report.final_occupation = {phat, std::sqrt(phat * (1.0 - phat) / n), ens.paths.size()};
    return report;
}

}  // namespace funess
