#include "funess/commands.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "funess/csv.hpp"
#include "funess/error.hpp"
#include "funess/general.hpp"
#include "funess/kernels.hpp"
#include "funess/montecarlo.hpp"
#include "funess/randomwalk.hpp"
#include "funess/rng.hpp"
#include "funess/statistics.hpp"

namespace funess {

namespace fs = std::filesystem;

bool VerifyReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        fail(ErrorCode::IoFailure, "SHA-256 initialisation failed");
    }
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
    return hex.str();
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                    const std::vector<fs::path>& files) {
    nlohmann::json m;
    m["command"] = command;
    m["version"] = kVersion;
    m["seed"] = cfg.seed;
    m["config"] = nlohmann::json::parse(dump_config(cfg));
    nlohmann::json sums = nlohmann::json::object();
    for (const auto& f : files) sums[f.generic_string()] = sha256_file(dir / f);
    m["files"] = sums;
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << m.dump(2) << '\n';
    if (!out) fail(ErrorCode::IoFailure, "failed writing manifest.json");
}

namespace {

fs::path prepare_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
    return dir;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
    return out;
}

FunessParams markov_counterpart(const FunessParams& p) {
    RawParams raw = p.raw();
    raw.r = 1.0 - raw.k;
    return validate_params(raw);
}

// ---------------------------------------------------------------- figures

void write_curves(const fs::path& dir, const std::string& suffix, const FunessParams& base, const RunConfig& cfg,
                  std::vector<fs::path>& files) {
    std::vector<std::vector<double>> corr, mi;
    for (double q1 : cfg.q_list) {
        const FunessParams p = base.with_q1(q1);
        for (double tau : cfg.tau_grid) {
            corr.push_back({tau, q1, stationary_correlation(tau, CorrelationMode::averaged(), p)});
            mi.push_back({tau, q1, conditional_mutual_information(tau, p).cmi});
        }
    }
    const fs::path corr_name = "corr_curves" + suffix + ".csv";
    const fs::path mi_name = "mi_curves" + suffix + ".csv";
    auto c = open_out(dir / corr_name);
    write_table_csv(c, {"tau", "q1", "C_avg"}, corr);
    auto m = open_out(dir / mi_name);
    write_table_csv(m, {"tau", "q1", "I_nats"}, mi);
    files.push_back(corr_name);
    files.push_back(mi_name);
}

// ---------------------------------------------------------------- verify

struct RandomTuple {
    FunessParams p;
    double t0, s, t;
};

class TupleSource {
public:
    explicit TupleSource(std::uint64_t seed) : rng_(seed, 0xF00DULL, StreamPurpose::IncrementDraw) {}

    RandomTuple next() {
        RawParams raw;
        raw.k = rng_.uniform();
        raw.r = std::min(1.0, 1.0 - raw.k + rng_.uniform() * raw.k);
        raw.alpha = 0.1 + 4.9 * rng_.uniform();
        raw.q1 = rng_.uniform();
        raw.x1 = 2.0 * rng_.uniform() - 1.0;
        raw.x2 = 2.0 * rng_.uniform() - 1.0;
        raw.t0 = 4.0 * rng_.uniform() - 2.0;
        const double s = raw.t0 + 3.0 * rng_.uniform();
        const double t = s + 3.0 * rng_.uniform();
        return {validate_params(raw), raw.t0, s, t};
    }

    double uniform() { return rng_.uniform(); }

private:
    RandomStream rng_;
};

CheckResult check(std::string name, double residual, double tolerance, std::string detail = {}) {
    return {std::move(name), residual <= tolerance, residual, tolerance, std::move(detail)};
}

CheckResult z_check(std::string name, double estimate, double reference, double std_error, double z_max = 4.0) {
    const double z = std_error > 0.0 ? std::abs(estimate - reference) / std_error
                                     : (estimate == reference ? 0.0 : std::numeric_limits<double>::infinity());
    std::ostringstream d;
    d << "estimate " << estimate << " +- " << std_error << " vs " << reference;
    return check(std::move(name), z, z_max, d.str());
}

template <class F>
CheckResult guarded(const std::string& name, F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        return {name, false, std::numeric_limits<double>::infinity(), 0.0,
                std::string("raised ") + std::string(to_string(e.code())) + ": " + e.what()};
    }
}

double column_defect(const ColumnStochasticMatrix& m) {
    const auto& a = m.matrix();
    double worst = 0.0;
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
        worst = std::max(worst, std::abs(a.col(c).sum() - 1.0));
        worst = std::max(worst, -a.col(c).minCoeff());
    }
    return worst;
}

double brute_intermediate_residual(const FunessParams& p, double s, double t) {
    const auto lam = intermediate_lambda(t, s, p);
    double worst = 0.0;
    for (std::size_t k = 0; k < 2; ++k) {
        double pk = 0.0;
        std::array<double, 2> pjk{};
        for (std::size_t l = 0; l < 2; ++l) {
            for (std::size_t j = 0; j < 2; ++j) {
                const std::array<double, 3> times{p.t0(), s, t};
                const std::array<std::size_t, 3> states{l, k, j};
                const double v = joint_probability(times, states, p);
                pjk[j] += v;
                pk += v;
            }
        }
        if (pk <= 0.0) continue;
        for (std::size_t j = 0; j < 2; ++j) worst = std::max(worst, std::abs(pjk[j] / pk - lam(j, k)));
    }
    return worst;
}

double brute_conditional_correlation(const FunessParams& p, std::size_t l, double tau) {
    const double s = p.t0() + 40.0 / p.alpha();
    const double t = s + tau;
    double cross = 0.0;
    for (std::size_t k = 0; k < 2; ++k) {
        for (std::size_t j = 0; j < 2; ++j) {
            const std::array<double, 3> times{p.t0(), s, t};
            const std::array<std::size_t, 3> states{l, k, j};
            cross += p.value(j) * p.value(k) * joint_probability(times, states, p) / p.q(l);
        }
    }
    const double mean = stationary_conditional_moments(l, p).mean;
    return cross - mean * mean;
}

void closed_form_checks(const RunConfig& cfg, const FunessParams& p, std::vector<CheckResult>& out) {
    constexpr int kTuples = 300;

    out.push_back(guarded("stochasticity", [&] {
        TupleSource src(cfg.seed);
        double worst = 0.0;
        for (int i = 0; i < kTuples; ++i) {
            const auto u = src.next();
            for (std::size_t l = 0; l < 2; ++l) worst = std::max(worst, column_defect(memory_kernel(l, u.t - u.s, u.p)));
            worst = std::max(worst, column_defect(lambda_initial(u.t - u.t0, u.p)));
            worst = std::max(worst, column_defect(gamma_divisor(u.t, u.s, u.p)));
            worst = std::max(worst, column_defect(intermediate_lambda(u.t, u.s, u.p)));
        }
        return check("stochasticity", worst, 1e-12, "Q, Lambda, Gamma, Lambda(t|s) columns");
    }));

    out.push_back(guarded("p_divisibility", [&] {
        TupleSource src(cfg.seed + 1);
        double worst = 0.0;
        for (int i = 0; i < kTuples; ++i) {
            const auto u = src.next();
            const auto lhs = lambda_initial(u.t - u.t0, u.p);
            const auto rhs = gamma_divisor(u.t, u.s, u.p) * lambda_initial(u.s - u.t0, u.p);
            worst = std::max(worst, max_abs_diff(lhs.matrix(), rhs.matrix()));
        }
        return check("p_divisibility", worst, 1e-12, "Lambda(t|t0) = Gamma(t|s) Lambda(s|t0)");
    }));

    out.push_back(guarded("composition", [&] {
        TupleSource src(cfg.seed + 2);
        double worst = 0.0;
        for (int i = 0; i < kTuples; ++i) {
            const auto u = src.next();
            const auto spec = cfg.inject_fault ? make_broken_kernel_spec(u.p) : make_funess_spec(u.p);
            const double mid = u.s + (u.t - u.s) * src.uniform();
            worst = std::max(worst, check_composition(spec, u.s, mid, u.t));
        }
        return check("composition", worst, 1e-12, cfg.inject_fault ? "broken-kernel fixture" : "Q^(l) semigroup");
    }));

    out.push_back(guarded("bayes_weights", [&] {
        TupleSource src(cfg.seed + 3);
        double worst = 0.0;
        for (int i = 0; i < kTuples; ++i) {
            auto u = src.next();
            if (u.p.q1() <= 0.0 || u.p.q1() >= 1.0) continue;
            const auto a0 = bayes_weights(0, u.s, u.p);
            const auto a1 = bayes_weights(1, u.s, u.p);
            for (std::size_t j = 0; j < 2; ++j) worst = std::max(worst, std::abs(a0.weight[j] + a1.weight[j] - 1.0));
        }
        return check("bayes_weights", worst, 1e-12, "sum_l D^(l) = I");
    }));

    out.push_back(guarded("intermediate_vs_bruteforce", [&] {
        TupleSource src(cfg.seed + 4);
        double worst = 0.0;
        for (int i = 0; i < kTuples; ++i) {
            const auto u = src.next();
            worst = std::max(worst, brute_intermediate_residual(u.p, u.s, u.t));
        }
        return check("intermediate_vs_bruteforce", worst, 1e-12, "Lambda(t|s) against the three-point joint");
    }));

    out.push_back(guarded("consistency_markov", [&] {
        const FunessParams m = markov_counterpart(p);
        const auto rep = check_consistency(m, m.t0() + 1.0, m.t0() + 0.5);
        const double res = rep.consistent ? rep.intermediate_residual : std::numeric_limits<double>::infinity();
        return check("consistency_markov", res, 1e-12, "r = 1 - k collapses the kernels");
    }));

    if (!p.markov() && !p.degenerate_statistics()) {
        out.push_back(guarded("non_divisibility_witness", [&] {
            const double s = p.t0() + 1.0 / p.alpha();
            const double t = s + 1.0 / p.alpha();
            const auto lhs = lambda_initial(t - p.t0(), p);
            const auto rhs = intermediate_lambda(t, s, p) * lambda_initial(s - p.t0(), p);
            const double gap = max_abs_diff(lhs.matrix(), rhs.matrix());
            std::ostringstream d;
            d << "||Lambda(t|t0) - Lambda(t|s) Lambda(s|t0)|| = " << gap << " must exceed 1e-6";
            return CheckResult{"non_divisibility_witness", gap > 1e-6, gap, 1e-6, d.str()};
        }));
    }

    out.push_back(guarded("master_equation", [&] {
        const Eigen::Vector2d q0(p.q1(), p.q2());
        const double step = 1e-3 / p.alpha();
        double worst = 0.0;
        for (int i = 1; i <= 10; ++i) {
            const double tau = 0.3 * i / p.alpha();
            const Eigen::Vector2d num = propagate_master(q0, p.t0() + tau, step, p);
            const Eigen::VectorXd exact = lambda_initial(tau, p) * Eigen::VectorXd(q0);
            worst = std::max(worst, (num - Eigen::Vector2d(exact)).cwiseAbs().maxCoeff());
        }
        return check("master_equation", worst, 1e-8, "RK4 vs Lambda(t|t0) q at 10 checkpoints");
    }));

    out.push_back(guarded("correlation_vs_bruteforce", [&] {
        const FunessParams pc = p.with_q1(0.5);
        double worst = 0.0;
        for (double tau : cfg.tau_grid) {
            for (std::size_t l = 0; l < 2; ++l) {
                const double closed = stationary_correlation(tau, CorrelationMode::conditional(l), pc);
                worst = std::max(worst, std::abs(closed - brute_conditional_correlation(pc, l, tau)));
            }
        }
        return check("correlation_vs_bruteforce", worst, 1e-10, "conditional C(tau) against joint sums");
    }));

    out.push_back(guarded("cmi_closed_vs_bruteforce", [&] {
        double worst = 0.0;
        for (double q1 : cfg.q_list) {
            const FunessParams pq = p.with_q1(q1);
            for (double tau : cfg.tau_grid) {
                const double a = conditional_mutual_information(tau, pq, CmiMethod::ClosedForm).cmi;
                const double b = conditional_mutual_information(tau, pq, CmiMethod::BruteForce).cmi;
                worst = std::max(worst, std::abs(a - b));
            }
        }
        return check("cmi_closed_vs_bruteforce", worst, 1e-10);
    }));

    out.push_back(guarded("cmi_zero_lag", [&] {
        double worst = 0.0;
        for (double q1 : cfg.q_list) worst = std::max(worst, std::abs(conditional_mutual_information(0.0, p.with_q1(q1)).cmi));
        return check("cmi_zero_lag", worst, 1e-12);
    }));

    out.push_back(guarded("entropy_difference", [&] {
        double worst = 0.0;
        for (double q1 : cfg.q_list) {
            const FunessParams pq = p.with_q1(q1);
            for (double tau : cfg.tau_grid) {
                worst = std::max(worst, std::abs(std::abs(entropy_difference(tau, pq)) -
                                                 conditional_mutual_information(tau, pq).cmi));
            }
        }
        return check("entropy_difference", worst, 1e-10, "|entropy difference| = CMI");
    }));

    out.push_back(guarded("cmi_markov_zero", [&] {
        const FunessParams m = markov_counterpart(p);
        double worst = 0.0;
        for (double q1 : cfg.q_list) {
            for (double tau : cfg.tau_grid) {
                worst = std::max(worst, conditional_mutual_information(tau, m.with_q1(q1)).cmi);
            }
        }
        return check("cmi_markov_zero", worst, 1e-12, "r = 1 - k");
    }));

    if (cfg.lambda) {
        out.push_back(guarded("walk_lattice_oracle", [&] {
            const WalkParams w = make_walk_params(p, *cfg.lambda);
            double worst = 0.0;
            for (double dt : {0.5, 1.0, 2.0}) {
                const double t = p.t0() + dt;
                const auto m = walk_moments_analytic(t, w);
                const auto d = walk_distribution_oracle(t, w, 1e-3 / p.alpha());
                const double scale_m = std::max(1.0, std::abs(m.mean));
                const double scale_v = std::max(1.0, std::abs(m.variance));
                worst = std::max({worst, std::abs(d.mean() - m.mean) / scale_m,
                                  std::abs(d.variance() - m.variance) / scale_v});
            }
            return check("walk_lattice_oracle", worst, 1e-6, "lattice master equation vs moment ODEs");
        }));
    }
}

void monte_carlo_checks(const RunConfig& cfg, const FunessParams& config_params, std::vector<CheckResult>& out) {
    constexpr std::size_t kPaths = 20000;
    const std::size_t threads = resolve_threads(cfg);
    const double q1 = (config_params.q1() < 0.05 || config_params.q1() > 0.95) ? 0.5 : config_params.q1();
    const FunessParams p = config_params.with_q1(q1);
    const double a = p.alpha();
    const Ensemble ens = simulate_ensemble(p, 40.0 / a, kPaths, cfg.seed, threads);

    out.push_back(guarded("mc_marginal", [&] {
        const double t = p.t0() + 1.0 / a;
        const auto est = estimate_marginal(ens, t);
        const Eigen::VectorXd exact = lambda_initial(t - p.t0(), p) * Eigen::VectorXd(Eigen::Vector2d(p.q1(), p.q2()));
        return z_check("mc_marginal", est.value, exact(0), est.std_error);
    }));

    out.push_back(guarded("mc_transition", [&] {
        const double s = p.t0() + 0.5 / a;
        const double t = s + 1.0 / a;
        const auto est = estimate_transition(ens, t, s);
        const auto exact = intermediate_lambda(t, s, p);
        double worst = 0.0;
        for (Eigen::Index j = 0; j < 2; ++j) {
            for (Eigen::Index k = 0; k < 2; ++k) {
                const double se = est.std_error(j, k);
                if (se > 0.0) worst = std::max(worst, std::abs(est.matrix.matrix()(j, k) - exact.matrix()(j, k)) / se);
            }
        }
        return check("mc_transition", worst, 4.0, "largest |z| over Lambda(t|s) entries");
    }));

    out.push_back(guarded("mc_correlation", [&] {
        const double s = p.t0() + 10.0 / a;
        const double tau = 0.5 / a;
        const auto est = estimate_correlation(ens, s + tau, s);
        return z_check("mc_correlation", est.estimate.value,
                       stationary_correlation(tau, CorrelationMode::averaged(), p), est.estimate.std_error);
    }));

    out.push_back(guarded("mc_cmi", [&] {
        const double s = p.t0() + 10.0 / a;
        const double tau = 1.0 / a;
        const auto est = estimate_cmi(ens, s, s + tau);
        const double exact = conditional_mutual_information(tau, p).cmi;
        std::ostringstream d;
        d << "plug-in " << est.estimate.value << " vs " << exact;
        return check("mc_cmi", std::abs(est.estimate.value - exact), 0.01, d.str());
    }));

    out.push_back(guarded("mc_occupation", [&] {
        const auto rep = ergodicity_diagnostic(ens, 20.0 / a);
        const std::array<double, 2> expected{p.k(), 1.0 - p.r()};
        double worst = 0.0;
        for (std::size_t l = 0; l < 2; ++l) {
            const auto& g = rep.by_initial_state[l];
            if (g.std_error > 0.0) worst = std::max(worst, std::abs(g.mean - expected[l]) / g.std_error);
        }
        const auto& f = rep.final_occupation;
        worst = std::max(worst, std::abs(f.value - stationary_marginal(p)(0)) / f.std_error);
        return check("mc_occupation", worst, 4.0, "time averages k, 1-r and ensemble occupation");
    }));

    if (cfg.lambda) {
        const WalkParams w = make_walk_params(p, *cfg.lambda);
        std::vector<double> grid;
        for (int i = 0; i <= 20; ++i) grid.push_back(p.t0() + 0.5 * i / a);
        const double t_check = grid[4];
        const double horizon = grid.back() - p.t0();

        out.push_back(guarded("mc_walk_trajectory", [&] {
            const auto samples = simulate_walk_ensemble(w, horizon, grid, kPaths, cfg.seed, threads);
            const auto est = estimate_walk_moments(samples, t_check);
            const auto m = walk_moments_analytic(t_check, w);
            const auto zm = z_check("", est.mean.value, m.mean, est.mean.std_error);
            const auto zv = z_check("", est.variance.value, walk_variance_correlated(t_check, w), est.variance.std_error);
            return check("mc_walk_trajectory", std::max(zm.residual, zv.residual), 4.0,
                         "mean vs moment ODE, variance vs correlated-increment formula");
        }));

        out.push_back(guarded("mc_walk_independent", [&] {
            const auto samples =
                simulate_walk_ensemble(w, horizon, grid, kPaths, cfg.seed, threads, WalkReadout::IndependentMarginal);
            const auto est = estimate_walk_moments(samples, t_check);
            const auto m = walk_moments_analytic(t_check, w);
            const auto zm = z_check("", est.mean.value, m.mean, est.mean.std_error);
            const auto zv = z_check("", est.variance.value, m.variance, est.variance.std_error);
            return check("mc_walk_independent", std::max(zm.residual, zv.residual), 4.0,
                         "mean and variance vs moment ODEs");
        }));
    }
}

// ---------------------------------------------------------------- walk

struct SimpleMoments {
    double mean, mean_se, var, var_se;
};

SimpleMoments sample_moments(const std::vector<WalkSample>& samples, std::size_t idx) {
    const double n = static_cast<double>(samples.size());
    if (samples.size() < 2) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {samples.empty() ? nan : samples[0].values[idx], nan, nan, nan};
    }
    double mean = 0.0;
    for (const auto& s : samples) mean += s.values[idx];
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
    return {mean, std::sqrt(var / n), var, std::sqrt(std::max(0.0, m4 - m2 * m2) / n)};
}

}  // namespace

VerifyReport run_verification(const RunConfig& cfg) {
    VerifyReport rep;
    const FunessParams p = validate_params(cfg.params);
    closed_form_checks(cfg, p, rep.checks);
    if (!cfg.quick) monte_carlo_checks(cfg, p, rep.checks);
    return rep;
}

int cmd_figures(const RunConfig& cfg, std::ostream& log) {
    const FunessParams p = validate_params(cfg.params);
    const fs::path dir = prepare_dir(cfg.output_dir);
    std::vector<fs::path> files;
    write_curves(dir, "", p, cfg, files);
    if (cfg.markov_reference) write_curves(dir, "_markov", markov_counterpart(p), cfg, files);
    write_manifest(dir, "figures", cfg, files);
    for (const auto& f : files) log << "wrote " << (dir / f).string() << '\n';
    return kExitOk;
}

int cmd_verify(const RunConfig& cfg, std::ostream& log) {
    const VerifyReport rep = run_verification(cfg);
    const fs::path dir = prepare_dir(cfg.output_dir);
    {
        auto out = open_out(dir / "verify_report.csv");
        out << "check,passed,residual,tolerance,detail\n";
        for (const auto& c : rep.checks) {
            std::string detail = c.detail;
            std::replace(detail.begin(), detail.end(), ',', ';');
            out << c.name << ',' << (c.passed ? 1 : 0) << ',' << format_double(c.residual) << ','
                << format_double(c.tolerance) << ',' << detail << '\n';
        }
    }
    write_manifest(dir, "verify", cfg, {"verify_report.csv"});
    for (const auto& c : rep.checks) {
        log << (c.passed ? "PASS " : "FAIL ") << std::left << std::setw(28) << c.name << " residual=" << c.residual
            << " tol=" << c.tolerance;
        if (!c.detail.empty()) log << "  (" << c.detail << ")";
        log << '\n';
    }
    const auto passed = std::count_if(rep.checks.begin(), rep.checks.end(), [](const auto& c) { return c.passed; });
    log << passed << '/' << rep.checks.size() << " checks passed\n";
    return rep.all_passed() ? kExitOk : kExitVerificationFailed;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
    const FunessParams p = validate_params(cfg.params);
    const std::size_t n = cfg.quick ? std::min<std::size_t>(cfg.n_trajectories, 1000) : cfg.n_trajectories;
    const fs::path dir = prepare_dir(cfg.output_dir);
    const Ensemble ens = simulate_ensemble(p, cfg.horizon, n, cfg.seed, resolve_threads(cfg));
    {
        auto out = open_out(dir / "ensemble.csv");
        write_ensemble_csv(out, ens);
    }
    std::vector<std::vector<double>> rows;
    const Eigen::VectorXd q0 = Eigen::Vector2d(p.q1(), p.q2());
    for (double tau : cfg.tau_grid) {
        if (tau > cfg.horizon) break;
        const auto est = estimate_marginal(ens, p.t0() + tau);
        rows.push_back({p.t0() + tau, (lambda_initial(tau, p) * q0)(0), est.value, est.std_error});
    }
    {
        auto out = open_out(dir / "marginal.csv");
        write_table_csv(out, {"t", "p1_analytic", "p1_mc", "p1_stderr"}, rows);
    }
    write_manifest(dir, "simulate", cfg, {"ensemble.csv", "marginal.csv"});
    log << "simulated " << n << " trajectories into " << dir.string() << '\n';
    return kExitOk;
}

int cmd_walk(const RunConfig& cfg, std::ostream& log) {
    if (!cfg.lambda) fail(ErrorCode::ConfigError, "walk requires 'lambda' in the config");
    const FunessParams base = validate_params(cfg.params);
    const std::size_t n = cfg.quick ? std::min<std::size_t>(cfg.n_trajectories, 1000) : cfg.n_trajectories;
    const std::size_t threads = resolve_threads(cfg);
    const fs::path dir = prepare_dir(cfg.output_dir);
    const std::vector<double> q_list = cfg.q_list.empty() ? std::vector<double>{base.q1()} : cfg.q_list;
    std::vector<double> grid = cfg.walk_grid;
    if (grid.empty()) grid = {base.t0(), base.t0() + cfg.horizon};

    std::vector<fs::path> files;
    std::vector<std::vector<double>> deff_rows;
    for (double q1 : q_list) {
        const WalkParams w = make_walk_params(base.with_q1(q1), *cfg.lambda);
        const auto samples = simulate_walk_ensemble(w, cfg.horizon, grid, n, cfg.seed, threads, cfg.walk_readout);
        const fs::path sub = "q1_" + format_double(q1);
        prepare_dir(dir / sub);

        const std::size_t exported = std::min(cfg.max_exported_paths, samples.size());
        {
            auto out = open_out(dir / sub / "walk_paths.csv");
            write_walk_csv(out, std::span<const WalkSample>(samples.data(), exported));
        }
        std::vector<MomentsRow> rows;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto m = walk_moments_analytic(grid[i], w);
            const auto mc = sample_moments(samples, i);
            const double var_model =
                cfg.walk_readout == WalkReadout::Trajectory ? walk_variance_correlated(grid[i], w) : m.variance;
            rows.push_back({grid[i], m.mean, mc.mean, mc.mean_se, var_model, mc.var, mc.var_se});
        }
        {
            auto out = open_out(dir / sub / "moments.csv");
            write_moments_csv(out, rows);
        }
        files.push_back(sub / "walk_paths.csv");
        files.push_back(sub / "moments.csv");

        double slope = std::numeric_limits<double>::quiet_NaN();
        double slope_se = std::numeric_limits<double>::quiet_NaN();
        const double t_lo = base.t0() + cfg.horizon / 2.0;
        const auto in_window = std::count_if(grid.begin(), grid.end(), [&](double t) { return t >= t_lo - 1e-12; });
        if (samples.size() >= 40 && in_window >= 2) {
            const auto fit = fit_variance_slope(samples, t_lo, base.t0() + cfg.horizon);
            slope = fit.value;
            slope_se = fit.std_error;
        }
        deff_rows.push_back({q1, effective_diffusion(w), effective_diffusion_correlated(w), slope / 2.0, slope_se / 2.0});
    }
    {
        auto out = open_out(dir / "walk_deff.csv");
        write_table_csv(out, {"q1", "d_eff", "d_eff_correlated", "d_eff_mc", "d_eff_mc_stderr"}, deff_rows);
    }
    files.push_back("walk_deff.csv");
    write_manifest(dir, "walk", cfg, files);
    log << "simulated " << n << " walks for " << q_list.size() << " initial distributions into " << dir.string()
        << '\n';
    return kExitOk;
}

}  // namespace funess
