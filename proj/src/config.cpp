#include "slq/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace slq {

namespace {

using json = nlohmann::json;

[[noreturn]] void field_error(const std::string& field, const std::string& msg) {
    throw ConfigError(field + ": " + msg, 0, field);
}

const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) field_error(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) field_error(path.empty() ? key : path + "." + key, "missing");
    return *it;
}

std::size_t to_size(const json& v, const std::string& field) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) field_error(field, "expected a nonnegative integer");
    const auto x = v.get<long long>();
    if (x < 0) field_error(field, "expected a nonnegative integer");
    return static_cast<std::size_t>(x);
}

double to_double(const json& v, const std::string& field) {
    if (!v.is_number()) field_error(field, "expected a number");
    return v.get<double>();
}

Matrix to_matrix(const json& v, std::size_t rows, std::size_t cols, const std::string& field) {
    if (v.is_number()) {
        if (rows != 1 || cols != 1) {
            field_error(field, "expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                                   " nested array, got a number");
        }
        return Matrix::Constant(1, 1, v.get<double>());
    }
    if (!v.is_array()) field_error(field, "expected a nested array");
    if (v.size() != rows) {
        field_error(field, "expected " + std::to_string(rows) + " rows, got " + std::to_string(v.size()));
    }
    Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const std::string rf = field + "[" + std::to_string(r) + "]";
        const json& row = v[r];
        if (!row.is_array()) field_error(rf, "expected an array");
        if (row.size() != cols) {
            field_error(rf, "expected " + std::to_string(cols) + " entries, got " + std::to_string(row.size()));
        }
        for (std::size_t c = 0; c < cols; ++c) {
            M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                to_double(row[c], rf + "[" + std::to_string(c) + "]");
        }
    }
    return M;
}

std::size_t line_of(std::string_view text, std::size_t byte) {
    const std::size_t end = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

json matrix_json(const Matrix& M) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string artifact_stem(const ProblemConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(cfg.content_hash));
    return cfg.id + "-" + buf;
}

ProblemConfig parse_problem_config(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const std::size_t line = line_of(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ConfigError("line " + std::to_string(line) + ": " + e.what(), line, "");
    }
    if (!doc.is_object()) throw ConfigError("top level must be a JSON object", 1, "");

    std::string id = "problem";
    if (auto it = doc.find("id"); it != doc.end()) {
        if (!it->is_string()) field_error("id", "expected a string");
        id = it->get<std::string>();
        if (id.empty()) field_error("id", "must not be empty");
        for (char c : id) {
            const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                            c == '_' || c == '-' || c == '.';
            if (!ok) field_error("id", "may only contain letters, digits, '_', '-' and '.'");
        }
    }

    const json& d = require(doc, "dims", "");
    Dimensions dims{to_size(require(d, "n", "dims"), "dims.n"), to_size(require(d, "m", "dims"), "dims.m"),
                    to_size(require(d, "m0", "dims"), "dims.m0")};
    if (dims.n == 0) field_error("dims.n", "must be at least 1");
    if (dims.m == 0) field_error("dims.m", "must be at least 1");
    if (dims.m0 == 0) field_error("dims.m0", "must be at least 1");

    const json& regs = require(doc, "regimes", "");
    if (!regs.is_array()) field_error("regimes", "expected an array");
    if (regs.size() != dims.m0) {
        field_error("regimes", "expected " + std::to_string(dims.m0) + " entries (dims.m0), got " +
                                   std::to_string(regs.size()));
    }
    RegimeCoefficients co;
    CostWeights cw;
    for (std::size_t i = 0; i < dims.m0; ++i) {
        const std::string base = "regimes[" + std::to_string(i) + "]";
        const json& r = regs[i];
        auto get = [&](const char* key, std::size_t rows, std::size_t cols) {
            return to_matrix(require(r, key, base), rows, cols, base + "." + key);
        };
        co.A.push_back(get("A", dims.n, dims.n));
        co.B.push_back(get("B", dims.n, dims.m));
        co.C.push_back(get("C", dims.n, dims.n));
        co.D.push_back(get("D", dims.n, dims.m));
        cw.Q.push_back(get("Q", dims.n, dims.n));
        cw.S.push_back(get("S", dims.m, dims.n));
        cw.R.push_back(get("R", dims.m, dims.m));
    }
    SwitchingGenerator gen{to_matrix(require(doc, "generator", ""), dims.m0, dims.m0, "generator")};

    std::optional<InitialTriple> initial;
    if (auto it = doc.find("initial"); it != doc.end()) {
        const json& in = *it;
        InitialTriple tr;
        const json& xs = require(in, "x", "initial");
        if (!xs.is_array() || xs.size() != dims.n) {
            field_error("initial.x", "expected an array of " + std::to_string(dims.n) + " numbers");
        }
        tr.x.resize(static_cast<Eigen::Index>(dims.n));
        for (std::size_t k = 0; k < dims.n; ++k) {
            tr.x(static_cast<Eigen::Index>(k)) = to_double(xs[k], "initial.x[" + std::to_string(k) + "]");
        }
        tr.regime = 0;
        if (auto rt = in.find("regime"); rt != in.end()) {
            const std::size_t r1 = to_size(*rt, "initial.regime");
            if (r1 < 1 || r1 > dims.m0) {
                field_error("initial.regime", "must lie in 1.." + std::to_string(dims.m0));
            }
            tr.regime = r1 - 1;
        }
        tr.t = 0.0;
        if (auto tt = in.find("t"); tt != in.end()) tr.t = to_double(*tt, "initial.t");
        initial = std::move(tr);
    }

    try {
        LQProblem p(dims, std::move(co), std::move(cw), std::move(gen));
        return ProblemConfig{id, std::move(p), std::move(initial), fnv1a64(text)};
    } catch (const ConfigError&) {
        throw;
    } catch (const StructuralError& e) {
        throw ConfigError(e.what(), 0, "regimes");
    }
}

ProblemConfig load_problem_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open problem file " + path.string(), 0, "");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_problem_config(ss.str());
}

std::string problem_to_json(const LQProblem& p, const std::string& id, const std::optional<InitialTriple>& initial) {
    json doc;
    doc["id"] = id;
    doc["dims"] = {{"n", p.n()}, {"m", p.m()}, {"m0", p.regimes()}};
    json regs = json::array();
    for (std::size_t i = 0; i < p.regimes(); ++i) {
        regs.push_back({{"A", matrix_json(p.A(i))},
                        {"B", matrix_json(p.B(i))},
                        {"C", matrix_json(p.C(i))},
                        {"D", matrix_json(p.D(i))},
                        {"Q", matrix_json(p.Q(i))},
                        {"S", matrix_json(p.S(i))},
                        {"R", matrix_json(p.R(i))}});
    }
    doc["regimes"] = std::move(regs);
    doc["generator"] = matrix_json(p.generator().lambda);
    if (initial) {
        json x = json::array();
        for (Eigen::Index k = 0; k < initial->x.size(); ++k) x.push_back(initial->x(k));
        doc["initial"] = {{"x", x}, {"regime", initial->regime + 1}, {"t", initial->t}};
    }
    return doc.dump(2) + "\n";
}

} // namespace slq
