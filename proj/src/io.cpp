#include "biot/io.hpp"

#include "biot/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace biot {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open '" + path.string() + "' for writing");
    return os;
}

std::string opt17(const std::optional<double>& v) { return v ? fmt17(*v) : std::string(); }

} // namespace

FlatConfig parse_flat_config(std::istream& in) {
    FlatConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        if (!cfg.emplace(key, value).second)
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    return cfg;
}

FlatConfig read_flat_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    return parse_flat_config(in);
}

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(what + ": not a number: '" + s + "'");
    }
}

int parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(what + ": not an integer: '" + s + "'");
    }
}

std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), what));
    if (out.empty()) throw ConfigError(what + ": empty list");
    return out;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_int(trim(item), what));
    if (out.empty()) throw ConfigError(what + ": empty list");
    return out;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream os = open_out(path);
    auto line = [&os](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << fields[i];
        os << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
}

void write_infsup_csv(const std::filesystem::path& path, const std::vector<InfSupRow>& rows) {
    std::vector<std::vector<std::string>> out;
    for (const InfSupRow& r : rows)
        out.push_back({r.triple, std::string(to_string(r.norms)), std::to_string(r.n), fmt17(r.params.lambda()),
                       fmt17(r.params.rp_inv()), fmt17(r.params.alpha_p()), fmt17(r.beta0)});
    write_csv(path, {"triple", "norms", "n", "lambda", "rp_inv", "alpha_p", "beta0"}, out);
}

void write_convergence_csv(const std::filesystem::path& path, const ConvergenceTable& table) {
    std::vector<std::vector<std::string>> out;
    for (const ConvergenceRow& r : table)
        out.push_back({std::to_string(r.n), fmt17(r.h), fmt17(r.err.err_U), fmt17(r.err.err_V), fmt17(r.err.err_P),
                       opt17(r.order_U), opt17(r.order_V), opt17(r.order_P)});
    write_csv(path, {"n", "h", "err_U", "err_V", "err_P", "order_U", "order_V", "order_P"}, out);
}

void write_minres_csv(const std::filesystem::path& path, const std::vector<MinresRow>& rows) {
    std::vector<std::vector<std::string>> out;
    for (const MinresRow& r : rows)
        out.push_back({std::to_string(r.n), fmt17(r.params.lambda()), fmt17(r.params.rp_inv()),
                       fmt17(r.params.alpha_p()), std::to_string(r.iters), opt17(r.cond_estimate)});
    write_csv(path, {"n", "lambda", "rp_inv", "alpha_p", "iters", "cond_estimate"}, out);
}

void write_residual_history_csv(const std::filesystem::path& path, const SolveReport& report) {
    std::vector<std::vector<std::string>> out;
    for (std::size_t i = 0; i < report.residual_history.size(); ++i)
        out.push_back({std::to_string(i + 1), fmt17(report.residual_history[i])});
    write_csv(path, {"iter", "resnorm"}, out);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os = open_out(path);
    os << text;
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    write_text(path, j.dump(2) + "\n");
}

} // namespace biot
