#include "fpca/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fpca::io {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return in;
}

[[noreturn]] void parse_error(const std::string& path, std::size_t line, const std::string& why) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + why);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) parse_error(path, line, "trailing characters in number: " + s);
        return v;
    } catch (const std::invalid_argument&) {
        parse_error(path, line, "not a number: " + s);
    } catch (const std::out_of_range&) {
        parse_error(path, line, "number out of range: " + s);
    }
}

long parse_long(const std::string& s, const std::string& path, std::size_t line) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size()) parse_error(path, line, "trailing characters in integer: " + s);
        return v;
    } catch (const std::exception&) {
        parse_error(path, line, "not an integer: " + s);
    }
}

} // namespace

std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void write_dataset_csv(const std::string& path, const model::FunctionalDataset& data) {
    auto out = open_out(path);
    out << "subject_id,obs_index,time,value\n";
    for (int i = 0; i < data.n(); ++i)
        for (int m = 0; m < data.N(); ++m)
            out << i << ',' << m << ',' << format_g17(data.times(i, m)) << ','
                << format_g17(data.values(i, m)) << '\n';
}

model::FunctionalDataset read_dataset_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) parse_error(path, 1, "empty file");
    ++lineno;
    if (line != "subject_id,obs_index,time,value")
        parse_error(path, lineno, "bad header, expected subject_id,obs_index,time,value");

    struct Row {
        long subject, obs;
        double time, value;
    };
    std::vector<Row> rows;
    long max_subject = -1, max_obs = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 4) parse_error(path, lineno, "expected 4 fields");
        Row r{parse_long(fields[0], path, lineno), parse_long(fields[1], path, lineno),
              parse_double(fields[2], path, lineno), parse_double(fields[3], path, lineno)};
        if (r.subject < 0 || r.obs < 0) parse_error(path, lineno, "negative index");
        max_subject = std::max(max_subject, r.subject);
        max_obs = std::max(max_obs, r.obs);
        rows.push_back(r);
    }
    if (rows.empty()) throw std::runtime_error(path + ": no observations");

    const long n = max_subject + 1;
    const long N = max_obs + 1;
    if (static_cast<long>(rows.size()) != n * N)
        throw std::runtime_error(path + ": ragged dataset, expected " + std::to_string(n * N) +
                                 " rows for n=" + std::to_string(n) + " N=" + std::to_string(N) +
                                 ", got " + std::to_string(rows.size()));

    model::FunctionalDataset data;
    data.times = Eigen::MatrixXd::Constant(n, N, -1.0);
    data.values.resize(n, N);
    for (const auto& r : rows) {
        data.times(r.subject, r.obs) = r.time;
        data.values(r.subject, r.obs) = r.value;
    }
    if ((data.times.array() < 0.0).any())
        throw std::runtime_error(path + ": missing (subject, obs_index) combinations");
    return data;
}

void write_scores_csv(const std::string& path, const Eigen::MatrixXd& scores) {
    auto out = open_out(path);
    out << "subject_id";
    for (Eigen::Index k = 0; k < scores.cols(); ++k) out << ",xi_" << (k + 1);
    out << '\n';
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        out << i;
        for (Eigen::Index k = 0; k < scores.cols(); ++k) out << ',' << format_g17(scores(i, k));
        out << '\n';
    }
}

Eigen::MatrixXd read_scores_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) parse_error(path, 1, "empty file");
    ++lineno;
    const auto header = split_csv(line);
    if (header.size() < 2 || header[0] != "subject_id")
        parse_error(path, lineno, "bad header, expected subject_id,xi_1,...");
    const std::size_t J = header.size() - 1;

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != J + 1) parse_error(path, lineno, "field count mismatch");
        std::vector<double> row(J);
        for (std::size_t k = 0; k < J; ++k) row[k] = parse_double(fields[k + 1], path, lineno);
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd scores(rows.size(), J);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < J; ++k) scores(i, k) = rows[i][k];
    return scores;
}

void write_covariance_csv(const std::string& path, const smoother::CovarianceEstimate& est) {
    auto out = open_out(path);
    const int G = est.grid.G;
    for (int g = 0; g < G; ++g) {
        if (g) out << ',';
        out << format_g17(est.grid.points[g]);
    }
    out << '\n';
    for (int r = 0; r < G; ++r) {
        for (int c = 0; c < G; ++c) {
            if (c) out << ',';
            out << format_g17(est.matrix(r, c));
        }
        out << '\n';
    }
}

smoother::CovarianceEstimate read_covariance_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) parse_error(path, 1, "empty file");
    ++lineno;
    const auto header = split_csv(line);
    const int G = static_cast<int>(header.size());
    if (G < 2) parse_error(path, lineno, "grid header too short");

    smoother::CovarianceEstimate est;
    est.grid = smoother::Grid::uniform(G);
    for (int g = 0; g < G; ++g) {
        const double p = parse_double(header[g], path, 1);
        if (std::abs(p - est.grid.points[g]) > 1e-12)
            parse_error(path, 1, "grid is not the uniform grid on [0,1]");
    }
    est.matrix.resize(G, G);
    int r = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (r >= G) parse_error(path, lineno, "too many rows");
        const auto fields = split_csv(line);
        if (static_cast<int>(fields.size()) != G) parse_error(path, lineno, "field count mismatch");
        for (int c = 0; c < G; ++c) est.matrix(r, c) = parse_double(fields[c], path, lineno);
        ++r;
    }
    if (r != G) throw std::runtime_error(path + ": expected " + std::to_string(G) + " rows");
    return est;
}

void write_eigenvalues_csv(const std::string& path, const Eigen::VectorXd& values) {
    auto out = open_out(path);
    out << "index,value\n";
    for (Eigen::Index k = 0; k < values.size(); ++k)
        out << (k + 1) << ',' << format_g17(values[k]) << '\n';
}

void write_eigenfunctions_csv(const std::string& path, const spectral::EigenSystem& sys,
                              int max_columns) {
    auto out = open_out(path);
    const int K = std::min<int>(max_columns, static_cast<int>(sys.eigenfunctions.cols()));
    out << "t";
    for (int k = 1; k <= K; ++k) out << ",phi_" << k;
    out << '\n';
    for (int g = 0; g < sys.grid.G; ++g) {
        out << format_g17(sys.grid.points[g]);
        for (int k = 0; k < K; ++k) out << ',' << format_g17(sys.eigenfunctions(g, k));
        out << '\n';
    }
}

} // namespace fpca::io
