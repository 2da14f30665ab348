#include "funess/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "funess/error.hpp"

namespace funess {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_ensemble_csv(std::ostream& out, const Ensemble& ens) {
    out << "trajectory_id,jump_index,time,state\n";
    for (std::size_t id = 0; id < ens.paths.size(); ++id) {
        const Trajectory& tr = ens.paths[id];
        out << id << ",0," << format_double(tr.t0) << ',' << tr.initial_state << '\n';
        for (std::size_t j = 0; j < tr.jump_times.size(); ++j) {
            out << id << ',' << j + 1 << ',' << format_double(tr.jump_times[j]) << ','
                << static_cast<unsigned>(tr.states[j]) << '\n';
        }
    }
    if (!out) fail(ErrorCode::IoFailure, "failed writing ensemble CSV");
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

template <class T>
T parse_field(const std::string& s, std::size_t line_no) {
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        fail(ErrorCode::IoFailure, "bad field '" + s + "' on line " + std::to_string(line_no));
    }
    return v;
}

}  // namespace

Ensemble read_ensemble_csv(std::istream& in, const FunessParams& p, double horizon) {
    std::string line;
    if (!std::getline(in, line) || line != "trajectory_id,jump_index,time,state") {
        fail(ErrorCode::IoFailure, "missing ensemble CSV header");
    }
    Ensemble ens{p, horizon, {}};
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != 4) fail(ErrorCode::IoFailure, "expected 4 fields on line " + std::to_string(line_no));
        const auto id = parse_field<std::size_t>(f[0], line_no);
        const auto jump = parse_field<std::size_t>(f[1], line_no);
        const auto t = parse_field<double>(f[2], line_no);
        const auto state = parse_field<unsigned>(f[3], line_no);
        if (state > 1) fail(ErrorCode::IoFailure, "state index out of range on line " + std::to_string(line_no));
        if (jump == 0) {
            if (id != ens.paths.size()) fail(ErrorCode::IoFailure, "trajectory ids must be consecutive");
            Trajectory tr;
            tr.initial_state = state;
            tr.t0 = t;
            tr.horizon = horizon;
            ens.paths.push_back(std::move(tr));
            continue;
        }
        if (ens.paths.empty() || id + 1 != ens.paths.size() || jump != ens.paths.back().jump_times.size() + 1) {
            fail(ErrorCode::IoFailure, "rows out of order on line " + std::to_string(line_no));
        }
        Trajectory& tr = ens.paths.back();
        const double prev = tr.jump_times.empty() ? tr.t0 : tr.jump_times.back();
        if (!(t > prev) || t > tr.t0 + horizon) {
            fail(ErrorCode::IoFailure, "jump times not ascending on line " + std::to_string(line_no));
        }
        tr.jump_times.push_back(t);
        tr.states.push_back(static_cast<std::uint8_t>(state));
    }
    return ens;
}

void write_walk_csv(std::ostream& out, std::span<const WalkSample> samples) {
    out << "trajectory_id,time,S\n";
    for (std::size_t id = 0; id < samples.size(); ++id) {
        const WalkSample& s = samples[id];
        for (std::size_t i = 0; i < s.grid.size(); ++i) {
            out << id << ',' << format_double(s.grid[i]) << ',' << format_double(s.values[i]) << '\n';
        }
    }
    if (!out) fail(ErrorCode::IoFailure, "failed writing walk CSV");
}

void write_moments_csv(std::ostream& out, std::span<const MomentsRow> rows) {
    std::vector<std::vector<double>> table;
    table.reserve(rows.size());
    for (const auto& r : rows) {
        table.push_back({r.t, r.mean_analytic, r.mean_mc, r.mean_stderr, r.var_analytic, r.var_mc, r.var_stderr});
    }
    write_table_csv(out, {"t", "mean_analytic", "mean_mc", "mean_stderr", "var_analytic", "var_mc", "var_stderr"},
                    table);
}

void write_table_csv(std::ostream& out, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
        out << '\n';
    }
    if (!out) fail(ErrorCode::IoFailure, "failed writing CSV");
}

}  // namespace funess
